#pragma once

#include <span>
#include <utility>
#include <vector>

#include "landside/model.hpp"
#include "landside/types.hpp"

namespace landside {
class PlantStepper;  // plant.hpp
}

namespace landside::mpc {

/// One bin's diversion decision. Feasible actions are (0,0), (1,0), (0,1).
struct Action {
    int td = 0;
    int ta = 0;
    bool operator==(const Action&) const = default;
    int active() const { return td + ta; }
};

struct MpcConfig {
    int horizon_t = 12;     // planning horizon in bins (3 hours)
    int exec_steps = 4;     // receding-horizon execution steps (1 hour)
    double ds_crit = 35.0;  // km/h, Departures critical speed
    double as_crit = 45.0;  // km/h, Arrivals critical speed
    double gamma = 0.01;    // control regularization
    std::vector<std::pair<double, double>> exo_forecast;  // (dv, av) per bin

    void validate() const;
};

/// Cost of being in `state` and signalling `action` for one bin:
/// (D-1)^2 + (A-1)^2 + gamma*(td+ta), with D = min(1, ds/ds_crit) and
/// A = min(1, as/as_crit) — the analytic optimum of the epigraph variables.
double stage_cost(const TrafficState& state, Action action, const MpcConfig& config);

/// Terminal state cost (no action term).
double terminal_cost(const TrafficState& state, const MpcConfig& config);

struct ControlPlan {
    std::vector<Action> actions;           // length horizon_t
    std::vector<TrafficState> predicted_states;  // x_1 .. x_T
    double cost = 0.0;
};

/// Exact finite-horizon solve over the 3^T feasible binary sequences by
/// depth-first enumeration with branch-and-bound pruning. Cost ties break
/// toward fewer active signals, then earliest activation, then TD over TA.
/// Refuses horizons above 16.
ControlPlan solve(const TrafficState& x_init, const DynamicsModel& model,
                  const MpcConfig& config);

struct TraceStep {
    TrafficState state;   // observed plant state after applying the action
    Action action;
    double solve_cost = 0.0;
    double solve_ms = 0.0;
};

struct ClosedLoopTrace {
    TrafficState x_init;
    std::vector<TraceStep> steps;
};

/// Receding-horizon loop: for each of total_steps bins, solve from the
/// current state, apply the first action to the plant, observe, re-plan.
/// config.exo_forecast must cover total_steps - 1 + horizon_t bins.
ClosedLoopTrace receding_horizon(const TrafficState& x_init, const DynamicsModel& model,
                                 PlantStepper& plant, const MpcConfig& config,
                                 int total_steps);

}  // namespace landside::mpc
