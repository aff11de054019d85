#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "landside/model.hpp"
#include "landside/rng.hpp"
#include "landside/types.hpp"

namespace landside {

/// Stochastic surrogate for the true system: the fitted dynamics plus
/// per-state uniform residual noise. Owns its generator state, so a stepper
/// is single-owner mutable; concurrent rollouts each get their own stepper.
class PlantStepper {
public:
    PlantStepper(DynamicsModel model, NoiseModel noise)
        : PlantStepper(std::move(model), noise, noise.seed) {}

    PlantStepper(DynamicsModel model, NoiseModel noise, std::uint64_t seed)
        : model_(std::move(model)), noise_(noise), rng_(seed) {
        noise_.validate_ordering();
    }

    /// x_{k+1} = clamp(A x + B u + w, 0) with w[i] ~ U(lo[i], hi[i]).
    /// Always draws exactly 4 uniforms, in state order, so trajectories are
    /// stable under refactoring.
    TrafficState step(const TrafficState& state, const ControlInput& input);

    /// Iterated step; result length equals inputs length.
    std::vector<TrafficState> rollout(const TrafficState& x_init,
                                      std::span<const ControlInput> inputs);

    const DynamicsModel& model() const { return model_; }
    const NoiseModel& noise() const { return noise_; }

private:
    DynamicsModel model_;
    NoiseModel noise_;
    Rng rng_;
};

}  // namespace landside
