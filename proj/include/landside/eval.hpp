#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "landside/model.hpp"
#include "landside/mpc.hpp"
#include "landside/types.hpp"

namespace landside::eval {

struct EvalConfig {
    double bottleneck_km_low = 0.5;
    double bottleneck_km_high = 2.0;
    double idle_fuel_gal_per_hr = 0.35;
    double idle_co2_g_per_hr = 2100.0;
    int mc_runs = 30;
    mpc::MpcConfig mpc;  // exec_steps and horizon come from here

    void validate() const;
};

struct CounterfactualStep {
    mpc::Action action;
    TrafficState state;
};

/// Receding-horizon run from the scenario onset with the stochastic plant,
/// DV/AV forecasts replayed from the scenario history. Returns the executed
/// actions and resulting counterfactual states (length exec_steps).
std::vector<CounterfactualStep> counterfactual_rollout(const Scenario& scenario,
                                                       const DynamicsModel& model,
                                                       const NoiseModel& noise,
                                                       const EvalConfig& config,
                                                       std::uint64_t run_seed);

struct RatioPoint {
    double ratio = 1.0;
    bool floored = false;  // actual speed was below the 1 km/h floor
};

/// counterfactual_speed / actual_speed per step for one facility, with the
/// actual speed floored at 1 km/h before division.
std::vector<RatioPoint> speed_ratio_profile(std::span<const TrafficState> actual,
                                            std::span<const TrafficState> counterfactual,
                                            Facility facility);

/// Cumulative vehicle-hours saved per hour of deployment, for the low and
/// high bottleneck lengths. Signed: steps where the counterfactual is slower
/// count against. Speeds are floored at 1 km/h.
std::pair<double, double> vehicle_hours_saved(std::span<const TrafficState> actual,
                                              std::span<const TrafficState> counterfactual,
                                              Facility facility, const EvalConfig& config);

struct OperationalSavings {
    double fuel_gal_low = 0.0, fuel_gal_high = 0.0;
    double co2_kg_low = 0.0, co2_kg_high = 0.0;
};

/// fuel = 0.35 gal/h * veh-hours; co2 = 2.1 kg/h * veh-hours. Exact products.
OperationalSavings operational_savings(std::pair<double, double> veh_hours,
                                       const EvalConfig& config);

struct StepStat {
    double mean = 0.0;
    double se = 0.0;  // standard error over Monte-Carlo runs (0 when n < 2)
};

/// Monte-Carlo summary of one scenario.
struct ScenarioResult {
    Facility treated = Facility::Departures;
    std::int64_t onset_index = 0;
    std::vector<StepStat> treated_ratio;    // per exec step
    std::vector<StepStat> untreated_ratio;  // per exec step
    double veh_hours_low = 0.0;   // mean over runs
    double veh_hours_high = 0.0;  // exactly 4x low by construction
    OperationalSavings savings;
    int mc_runs = 0;
};

/// Runs mc_runs counterfactual rollouts (seeds derived from scenario_seed)
/// and reduces them into a ScenarioResult.
ScenarioResult evaluate_scenario(const Scenario& scenario, const DynamicsModel& model,
                                 const NoiseModel& noise, const EvalConfig& config,
                                 std::uint64_t scenario_seed);

struct PanelStep {
    StepStat treated;
    StepStat untreated;
};

/// Per-facility speed-ratio panel: mean and standard error over scenarios.
struct FacilityPanel {
    Facility treated = Facility::Departures;
    int n_scenarios = 0;
    std::vector<PanelStep> steps;
};

struct Quartiles {
    double q1 = 0.0, q3 = 0.0;
};

struct CampaignReport {
    std::array<FacilityPanel, 2> panels;  // [Departures treated, Arrivals treated]
    double veh_hours_low_mean = 0.0;
    double veh_hours_high_mean = 0.0;
    Quartiles veh_hours_low_iqr;
    Quartiles veh_hours_high_iqr;
    std::vector<ScenarioResult> scenarios;
};

/// Sequential reduce over completed scenario results.
CampaignReport aggregate(std::span<const ScenarioResult> results);

/// Evaluates every scenario and aggregates. jobs > 1 runs scenarios on an
/// OpenMP team; results are written into per-scenario slots and reduced in
/// index order, so the report is bit-identical to the serial path.
CampaignReport run_campaign(std::span<const Scenario> scenarios, const DynamicsModel& model,
                            const NoiseModel& noise, const EvalConfig& config,
                            std::uint64_t campaign_seed, int jobs = 1);

/// Plain-loop reference implementation, kept for testing and benchmarking.
CampaignReport run_campaign_serial(std::span<const Scenario> scenarios,
                                   const DynamicsModel& model, const NoiseModel& noise,
                                   const EvalConfig& config, std::uint64_t campaign_seed);

/// Quantile with linear interpolation between closest ranks; q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace landside::eval
