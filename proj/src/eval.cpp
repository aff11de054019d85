#include "landside/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "landside/plant.hpp"
#include "landside/rng.hpp"

namespace landside::eval {

namespace {

constexpr double kSpeedFloorKmh = 1.0;

double floored(double speed) { return std::max(speed, kSpeedFloorKmh); }

StepStat mean_se(std::span<const double> values) {
    StepStat s;
    const std::size_t n = values.size();
    if (n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(n);
    if (n >= 2) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        double var = sq / static_cast<double>(n - 1);
        s.se = std::sqrt(var / static_cast<double>(n));
    }
    return s;
}

}  // namespace

void EvalConfig::validate() const {
    if (!(bottleneck_km_low > 0.0) || !(bottleneck_km_high >= bottleneck_km_low)) {
        throw ConfigError("eval config: need 0 < bottleneck_km_low <= bottleneck_km_high");
    }
    if (!(idle_fuel_gal_per_hr >= 0.0) || !(idle_co2_g_per_hr >= 0.0)) {
        throw ConfigError("eval config: idle rates must be non-negative");
    }
    if (mc_runs < 1) throw ConfigError("eval config: mc_runs must be >= 1");
    mpc.validate();
}

std::vector<CounterfactualStep> counterfactual_rollout(const Scenario& scenario,
                                                       const DynamicsModel& model,
                                                       const NoiseModel& noise,
                                                       const EvalConfig& config,
                                                       std::uint64_t run_seed) {
    config.validate();
    const int exec = config.mpc.exec_steps;
    const std::size_t needed =
        static_cast<std::size_t>(exec - 1) + static_cast<std::size_t>(config.mpc.horizon_t) + 1;
    if (scenario.window.size() < needed) {
        throw DataError("scenario too short: counterfactual rollout needs " +
                        std::to_string(needed) + " bins, window has " +
                        std::to_string(scenario.window.size()));
    }

    mpc::MpcConfig step_config = config.mpc;
    step_config.exo_forecast.clear();
    for (std::size_t k = 0; k + 1 < needed; ++k) {
        const ControlInput& u = scenario.window.inputs[k];
        step_config.exo_forecast.emplace_back(u.dv(), u.av());
    }

    PlantStepper plant(model, noise, run_seed);
    mpc::ClosedLoopTrace trace =
        mpc::receding_horizon(scenario.window.states.front(), model, plant, step_config, exec);

    std::vector<CounterfactualStep> out;
    out.reserve(trace.steps.size());
    for (const auto& step : trace.steps) out.push_back({step.action, step.state});
    return out;
}

std::vector<RatioPoint> speed_ratio_profile(std::span<const TrafficState> actual,
                                            std::span<const TrafficState> counterfactual,
                                            Facility facility) {
    if (actual.size() != counterfactual.size()) {
        throw DataError("speed_ratio_profile: trajectories must have equal length");
    }
    std::vector<RatioPoint> out;
    out.reserve(actual.size());
    for (std::size_t k = 0; k < actual.size(); ++k) {
        double a = actual[k].speed(facility);
        RatioPoint p;
        p.floored = a < kSpeedFloorKmh;
        p.ratio = counterfactual[k].speed(facility) / floored(a);
        out.push_back(p);
    }
    return out;
}

std::pair<double, double> vehicle_hours_saved(std::span<const TrafficState> actual,
                                              std::span<const TrafficState> counterfactual,
                                              Facility facility, const EvalConfig& config) {
    if (actual.size() != counterfactual.size()) {
        throw DataError("vehicle_hours_saved: trajectories must have equal length");
    }
    double low = 0.0, high = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        double a = floored(actual[k].speed(facility));
        double c = floored(counterfactual[k].speed(facility));
        double improvement = 1.0 / a - 1.0 / c;  // hours per km, signed
        double flow = actual[k].flow(facility);
        low += config.bottleneck_km_low * improvement * flow;
        high += config.bottleneck_km_high * improvement * flow;
    }
    // The 4-bin execution window spans one hour, so the sum is already per
    // hour of deployment.
    return {low, high};
}

OperationalSavings operational_savings(std::pair<double, double> veh_hours,
                                       const EvalConfig& config) {
    if (!std::isfinite(veh_hours.first) || !std::isfinite(veh_hours.second)) {
        throw DataError("operational_savings: vehicle-hours must be finite");
    }
    OperationalSavings s;
    s.fuel_gal_low = config.idle_fuel_gal_per_hr * veh_hours.first;
    s.fuel_gal_high = config.idle_fuel_gal_per_hr * veh_hours.second;
    double kg_per_hr = config.idle_co2_g_per_hr / 1000.0;
    s.co2_kg_low = kg_per_hr * veh_hours.first;
    s.co2_kg_high = kg_per_hr * veh_hours.second;
    return s;
}

ScenarioResult evaluate_scenario(const Scenario& scenario, const DynamicsModel& model,
                                 const NoiseModel& noise, const EvalConfig& config,
                                 std::uint64_t scenario_seed) {
    config.validate();
    const int exec = config.mpc.exec_steps;
    if (scenario.window.size() < static_cast<std::size_t>(exec) + 1) {
        throw DataError("scenario too short: need " + std::to_string(exec + 1) +
                        " observed bins, window has " + std::to_string(scenario.window.size()));
    }
    const Facility treated = scenario.congested_facility;
    const Facility untreated = other_facility(treated);

    // Observed history over the execution window: states after 1..exec bins.
    std::vector<TrafficState> actual(scenario.window.states.begin() + 1,
                                     scenario.window.states.begin() + 1 + exec);

    std::vector<std::vector<double>> treated_ratios(static_cast<std::size_t>(exec));
    std::vector<std::vector<double>> untreated_ratios(static_cast<std::size_t>(exec));
    std::vector<double> lows, highs;
    lows.reserve(static_cast<std::size_t>(config.mc_runs));
    highs.reserve(static_cast<std::size_t>(config.mc_runs));

    for (int run = 0; run < config.mc_runs; ++run) {
        std::uint64_t run_seed = derive_seed(scenario_seed, static_cast<std::uint64_t>(run));
        auto cf = counterfactual_rollout(scenario, model, noise, config, run_seed);
        std::vector<TrafficState> cf_states;
        cf_states.reserve(cf.size());
        for (const auto& step : cf) cf_states.push_back(step.state);

        auto tr = speed_ratio_profile(actual, cf_states, treated);
        auto ur = speed_ratio_profile(actual, cf_states, untreated);
        for (int k = 0; k < exec; ++k) {
            treated_ratios[static_cast<std::size_t>(k)].push_back(tr[static_cast<std::size_t>(k)].ratio);
            untreated_ratios[static_cast<std::size_t>(k)].push_back(ur[static_cast<std::size_t>(k)].ratio);
        }
        auto [lo, hi] = vehicle_hours_saved(actual, cf_states, treated, config);
        lows.push_back(lo);
        highs.push_back(hi);
    }

    ScenarioResult result;
    result.treated = treated;
    result.onset_index = scenario.onset_index;
    result.mc_runs = config.mc_runs;
    for (int k = 0; k < exec; ++k) {
        result.treated_ratio.push_back(mean_se(treated_ratios[static_cast<std::size_t>(k)]));
        result.untreated_ratio.push_back(mean_se(untreated_ratios[static_cast<std::size_t>(k)]));
    }
    result.veh_hours_low = mean_se(lows).mean;
    result.veh_hours_high = mean_se(highs).mean;
    result.savings = operational_savings({result.veh_hours_low, result.veh_hours_high}, config);
    return result;
}

CampaignReport aggregate(std::span<const ScenarioResult> results) {
    if (results.empty()) throw DataError("aggregate: no scenario results");

    CampaignReport report;
    report.scenarios.assign(results.begin(), results.end());

    for (int f = 0; f < 2; ++f) {
        Facility fac = f == 0 ? Facility::Departures : Facility::Arrivals;
        FacilityPanel& panel = report.panels[static_cast<std::size_t>(f)];
        panel.treated = fac;

        std::size_t steps = 0;
        for (const auto& r : results) {
            if (r.treated == fac) steps = std::max(steps, r.treated_ratio.size());
        }
        for (std::size_t k = 0; k < steps; ++k) {
            std::vector<double> tm, um;
            for (const auto& r : results) {
                if (r.treated != fac || k >= r.treated_ratio.size()) continue;
                tm.push_back(r.treated_ratio[k].mean);
                um.push_back(r.untreated_ratio[k].mean);
            }
            PanelStep step;
            step.treated = mean_se(tm);
            step.untreated = mean_se(um);
            panel.steps.push_back(step);
            panel.n_scenarios = static_cast<int>(tm.size());
        }
    }

    std::vector<double> lows, highs;
    for (const auto& r : results) {
        lows.push_back(r.veh_hours_low);
        highs.push_back(r.veh_hours_high);
    }
    report.veh_hours_low_mean = mean_se(lows).mean;
    report.veh_hours_high_mean = mean_se(highs).mean;
    std::sort(lows.begin(), lows.end());
    std::sort(highs.begin(), highs.end());
    report.veh_hours_low_iqr = {quantile_sorted(lows, 0.25), quantile_sorted(lows, 0.75)};
    report.veh_hours_high_iqr = {quantile_sorted(highs, 0.25), quantile_sorted(highs, 0.75)};
    return report;
}

CampaignReport run_campaign_serial(std::span<const Scenario> scenarios,
                                   const DynamicsModel& model, const NoiseModel& noise,
                                   const EvalConfig& config, std::uint64_t campaign_seed) {
    if (scenarios.empty()) throw DataError("run_campaign: no scenarios");
    std::vector<ScenarioResult> results(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        results[i] = evaluate_scenario(scenarios[i], model, noise, config,
                                       derive_seed(campaign_seed, i));
    }
    return aggregate(results);
}

CampaignReport run_campaign(std::span<const Scenario> scenarios, const DynamicsModel& model,
                            const NoiseModel& noise, const EvalConfig& config,
                            std::uint64_t campaign_seed, int jobs) {
    if (jobs < 1) throw ConfigError("run_campaign: jobs must be >= 1");
    if (jobs == 1) return run_campaign_serial(scenarios, model, noise, config, campaign_seed);
    if (scenarios.empty()) throw DataError("run_campaign: no scenarios");

#ifdef _OPENMP
    // Each scenario evaluates independently with its own derived seed and
    // writes into its own slot; the reduce below runs in index order, so the
    // report matches the serial path bit for bit at any thread count.
    std::vector<ScenarioResult> results(scenarios.size());
    std::vector<std::exception_ptr> errors(scenarios.size());
    const auto count = static_cast<std::int64_t>(scenarios.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            auto idx = static_cast<std::size_t>(i);
            results[idx] = evaluate_scenario(scenarios[idx], model, noise, config,
                                             derive_seed(campaign_seed, idx));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return aggregate(results);
#else
    return run_campaign_serial(scenarios, model, noise, config, campaign_seed);
#endif
}

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile: empty sample");
    if (sorted.size() == 1) return sorted[0];
    q = std::min(1.0, std::max(0.0, q));
    double h = q * static_cast<double>(sorted.size() - 1);
    std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace landside::eval
