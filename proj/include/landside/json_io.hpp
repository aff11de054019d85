#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landside/eval.hpp"
#include "landside/model.hpp"
#include "landside/mpc.hpp"
#include "landside/synth.hpp"
#include "landside/types.hpp"

// File formats. Every JSON document carries format_version (currently 1);
// readers reject other versions. The scenario file is a bare JSON array of
// {start, end, facility, onset_index} objects by contract.

namespace landside::io {

inline constexpr int kFormatVersion = 1;

void write_model_json(const std::string& path, const DynamicsModel& model);
DynamicsModel read_model_json(const std::string& path);

void write_noise_json(const std::string& path, const NoiseModel& noise);
NoiseModel read_noise_json(const std::string& path);

void write_scenarios_json(const std::string& path, std::span<const Scenario> scenarios);

/// Full validation report: MAE/RMSE, histograms, percentiles, solver info.
void write_fit_report_json(const std::string& path, const FitReport& report);

void write_trace_json(const std::string& path, const mpc::ClosedLoopTrace& trace);

void write_campaign_report_json(const std::string& path, const eval::CampaignReport& report,
                                std::uint64_t seed, int mc_runs);

/// Plot-ready CSV analogs of the report figures.
void write_speed_ratio_csv(const std::string& path, const eval::CampaignReport& report);
void write_vehicle_hours_csv(const std::string& path, const eval::CampaignReport& report);

void write_injections_json(const std::string& path, std::span<const synth::Injection> injections);

}  // namespace landside::io
