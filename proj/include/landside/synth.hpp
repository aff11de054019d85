#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landside/ingest.hpp"
#include "landside/model.hpp"
#include "landside/types.hpp"

namespace landside::synth {

struct SynthConfig {
    std::uint64_t seed = 42;
    int days = 60;
    int episodes = 20;           // injected untreated-congestion episodes
    int bin_minutes = 15;
    std::int64_t start_epoch = 1651363200;  // 2022-05-01T00:00:00Z
    double episode_dip_ratio = 0.45;        // dip depth as a fraction of critical speed
    int episode_min_bins = 8;
    int episode_max_bins = 14;
    bool deploy_messages = true;  // scatter historical TD/TA deployments

    void validate() const;
};

struct Injection {
    Facility facility = Facility::Departures;
    int start_index = 0;
    int bins = 0;
};

struct SynthOutput {
    std::vector<ingest::RawRecord> records;
    DynamicsModel truth;
    NoiseModel noise;
    std::vector<Injection> injections;
};

/// Seeded synthetic campaign: a stable masked ground-truth model driven by
/// deterministic bimodal daily passenger-volume profiles, uniform transition
/// noise, scattered message deployments on odd days, and injected daytime
/// congestion episodes (alternating facility) on even days.
SynthOutput generate(const SynthConfig& config);

/// Writes records in the ingest CSV schema.
void write_dataset_csv(const std::string& path, std::span<const ingest::RawRecord> records);

}  // namespace landside::synth
