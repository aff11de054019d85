#pragma once

#include <cstdint>
#include <functional>

#include "landside/ingest.hpp"
#include "landside/model.hpp"
#include "landside/types.hpp"

namespace landside::sysid {

struct FitConfig {
    double rho = 0.1;          // row-group (l2,1) regularization weight
    int max_iters = 5000;
    double abs_tol = 1e-6;
    double rel_tol = 1e-4;
    double admm_penalty = 1.0; // fixed, no residual balancing
    StructuralMasks masks = StructuralMasks::defaults();

    /// Optional per-iteration observer (iter, objective, primal, dual);
    /// only invoked when set. Used by property tests.
    std::function<void(int, double, double, double)> iter_observer;

    void validate() const;
};

/// Proximal operator of threshold * ||row||_2: scales the row by
/// max(0, 1 - threshold / ||row||_2), annihilating rows at or below the
/// threshold.
Vec8 row_group_prox(const Vec8& row, double threshold);

/// Objective of the fitting problem: 0.5 * ||Y - A'X'||_F^2 + rho * ||A'||_{2,1}.
double fit_objective(const Mat48& ab, const ingest::RegressionDataset& data, double rho);

/// Estimates A' = [A B] by consensus ADMM over three blocks: the smooth
/// least-squares term (closed form), the row-group prox, and the exact
/// entrywise mask projection. The returned matrices satisfy the masks
/// exactly. Throws SolverError if tolerances are not met in max_iters.
DynamicsModel fit(const ingest::RegressionDataset& train, const FitConfig& config);

/// One-step-ahead validation residuals r = y - A'x' per column, summarized
/// per state: MAE, RMSE, fixed-edge histograms, and percentiles 1..99.
FitReport evaluate(const DynamicsModel& model, const ingest::RegressionDataset& validation);

/// Reads the residual percentile pair off the report to bound the plant's
/// uniform noise. Errors unless every state's bounds straddle zero.
NoiseModel calibrate_noise(const FitReport& report, int low_pct = 10, int high_pct = 90,
                           std::uint64_t seed = 0);

}  // namespace landside::sysid
