#include "landside/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "landside/plant.hpp"

namespace landside::mpc {

void MpcConfig::validate() const {
    if (horizon_t < 1) throw ConfigError("mpc config: horizon_t must be >= 1");
    if (exec_steps < 1 || exec_steps > horizon_t) {
        throw ConfigError("mpc config: need 1 <= exec_steps <= horizon_t");
    }
    if (!(ds_crit > 0.0) || !(as_crit > 0.0)) {
        throw ConfigError("mpc config: critical speeds must be positive");
    }
    if (!(gamma >= 0.0)) throw ConfigError("mpc config: gamma must be non-negative");
}

double terminal_cost(const TrafficState& state, const MpcConfig& config) {
    double d = std::min(1.0, state.ds() / config.ds_crit);
    double a = std::min(1.0, state.as() / config.as_crit);
    return (d - 1.0) * (d - 1.0) + (a - 1.0) * (a - 1.0);
}

double stage_cost(const TrafficState& state, Action action, const MpcConfig& config) {
    return terminal_cost(state, config) + config.gamma * static_cast<double>(action.active());
}

namespace {

// Feasible per-bin actions; the index doubles as the tie-break code, so
// earlier codes are preferred: TD before TA before no message. Combined
// with the active-signal count this yields "fewer signals, then earliest
// activation, then TD" ordering.
constexpr Action kActions[3] = {{1, 0}, {0, 1}, {0, 0}};
constexpr int kNoAction = 2;

struct PlanKey {
    double cost = 0.0;
    int active = 0;
    std::vector<int> codes;

    bool better_than(const PlanKey& o) const {
        if (cost != o.cost) return cost < o.cost;
        if (active != o.active) return active < o.active;
        return codes < o.codes;
    }
};

struct Search {
    const DynamicsModel& model;
    const MpcConfig& config;
    int horizon;

    std::vector<int> codes;               // current path, one code per depth
    std::vector<TrafficState> states;     // x_1 .. x_depth along the path

    PlanKey best;
    std::vector<TrafficState> best_states;
    bool have_best = false;

    Search(const DynamicsModel& m, const MpcConfig& c)
        : model(m), config(c), horizon(c.horizon_t) {
        codes.assign(static_cast<std::size_t>(horizon), kNoAction);
        states.resize(static_cast<std::size_t>(horizon));
    }

    void consider_leaf(double total) {
        PlanKey key;
        key.cost = total;
        key.codes = codes;
        key.active = 0;
        for (int c : codes) key.active += (c == kNoAction) ? 0 : 1;
        if (!have_best || key.better_than(best)) {
            best = std::move(key);
            best_states = states;
            have_best = true;
        }
    }

    // x is x_depth; partial holds the stage costs of bins 0..depth-1 plus
    // the state cost of every visited state including x.
    void dfs(const TrafficState& x, int depth, double partial) {
        if (depth == horizon) {
            consider_leaf(partial);
            return;
        }
        // Stage and future costs are non-negative, so a partial cost already
        // above the incumbent cannot lead to a better leaf. Equal cost must
        // continue: a tie can still win on the secondary keys.
        if (have_best && partial > best.cost) return;

        const auto& fc = config.exo_forecast[static_cast<std::size_t>(depth)];
        struct Child {
            int code;
            TrafficState next;
            double partial;  // running cost after taking this branch
            double estimate; // branch-ordering key only
        };
        Child children[3];
        for (int c = 0; c < 3; ++c) {
            ControlInput u(kActions[c].td, kActions[c].ta, fc.first, fc.second);
            TrafficState next = model.predict(x, u);
            // Accumulation order matches the plain sum over the sequence, so
            // costs compare bit-exactly against unpruned enumeration.
            double running = partial + config.gamma * kActions[c].active();
            double state_cost = terminal_cost(next, config);
            running += state_cost;
            children[c] = {c, next, running, state_cost + config.gamma * kActions[c].active()};
        }
        // Greedy child order tightens the incumbent early; ties keep code
        // order so exploration stays deterministic.
        std::sort(std::begin(children), std::end(children), [](const Child& l, const Child& r) {
            if (l.estimate != r.estimate) return l.estimate < r.estimate;
            return l.code < r.code;
        });
        for (const Child& ch : children) {
            codes[static_cast<std::size_t>(depth)] = ch.code;
            states[static_cast<std::size_t>(depth)] = ch.next;
            dfs(ch.next, depth + 1, ch.partial);
        }
        codes[static_cast<std::size_t>(depth)] = kNoAction;
    }
};

}  // namespace

ControlPlan solve(const TrafficState& x_init, const DynamicsModel& model,
                  const MpcConfig& config) {
    config.validate();
    if (config.horizon_t > 16) {
        throw ConfigError("mpc solve: horizon above 16 exceeds the enumeration budget");
    }
    if (config.exo_forecast.size() < static_cast<std::size_t>(config.horizon_t)) {
        throw ConfigError("mpc solve: exo_forecast must cover the horizon (" +
                          std::to_string(config.exo_forecast.size()) + " < " +
                          std::to_string(config.horizon_t) + ")");
    }

    Search search(model, config);
    search.dfs(x_init, 0, terminal_cost(x_init, config));

    ControlPlan plan;
    plan.cost = search.best.cost;
    plan.actions.reserve(static_cast<std::size_t>(config.horizon_t));
    for (int code : search.best.codes) plan.actions.push_back(kActions[code]);
    plan.predicted_states = std::move(search.best_states);
    return plan;
}

ClosedLoopTrace receding_horizon(const TrafficState& x_init, const DynamicsModel& model,
                                 PlantStepper& plant, const MpcConfig& config,
                                 int total_steps) {
    config.validate();
    if (total_steps < 1) throw ConfigError("receding_horizon: total_steps must be >= 1");
    std::size_t needed =
        static_cast<std::size_t>(total_steps - 1) + static_cast<std::size_t>(config.horizon_t);
    if (config.exo_forecast.size() < needed) {
        throw ConfigError("receding_horizon: exo_forecast must cover " + std::to_string(needed) +
                          " bins, got " + std::to_string(config.exo_forecast.size()));
    }

    ClosedLoopTrace trace;
    trace.x_init = x_init;
    trace.steps.reserve(static_cast<std::size_t>(total_steps));

    TrafficState x = x_init;
    MpcConfig step_config = config;
    for (int t = 0; t < total_steps; ++t) {
        step_config.exo_forecast.assign(
            config.exo_forecast.begin() + t,
            config.exo_forecast.begin() + t + config.horizon_t);

        auto t0 = std::chrono::steady_clock::now();
        ControlPlan plan = solve(x, model, step_config);
        auto t1 = std::chrono::steady_clock::now();

        Action act = plan.actions.front();
        const auto& fc = config.exo_forecast[static_cast<std::size_t>(t)];
        x = plant.step(x, ControlInput(act.td, act.ta, fc.first, fc.second));

        TraceStep step;
        step.state = x;
        step.action = act;
        step.solve_cost = plan.cost;
        step.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        trace.steps.push_back(step);
    }
    return trace;
}

}  // namespace landside::mpc
