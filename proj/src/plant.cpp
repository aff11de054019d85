#include "landside/plant.hpp"

namespace landside {

TrafficState PlantStepper::step(const TrafficState& state, const ControlInput& input) {
    Vec4 mean = matvec(model_.a, state.vec());
    Vec4 bu = matvec(model_.b, input.vec());
    Vec4 next;
    // Fixed draw order (DF, DS, AF, AS), exactly 4 draws per step.
    for (std::size_t i = 0; i < 4; ++i) {
        double w = rng_.uniform(noise_.lo[i], noise_.hi[i]);
        next[i] = mean[i] + bu[i] + w;
    }
    return TrafficState::from_vec(next);
}

std::vector<TrafficState> PlantStepper::rollout(const TrafficState& x_init,
                                                std::span<const ControlInput> inputs) {
    if (inputs.empty()) throw ConfigError("rollout: inputs must be non-empty");
    std::vector<TrafficState> out;
    out.reserve(inputs.size());
    TrafficState x = x_init;
    for (const ControlInput& u : inputs) {
        x = step(x, u);
        out.push_back(x);
    }
    return out;
}

}  // namespace landside
