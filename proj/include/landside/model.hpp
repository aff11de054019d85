#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "landside/linalg.hpp"
#include "landside/types.hpp"

namespace landside {

/// Entrywise structural constraints on the stacked system matrix A' = [A B]
/// (4 rows, 8 columns: state columns 0..3, input columns 4..7).
struct StructuralMasks {
    enum Sign : std::int8_t { kFree = 0, kNonNegative = 1, kNonPositive = -1 };

    std::array<bool, 32> zero{};        // entry forced to exactly 0
    std::array<std::int8_t, 32> sign{}; // kNonNegative / kNonPositive / kFree

    bool zero_at(int r, int c) const { return zero[r * 8 + c]; }
    std::int8_t sign_at(int r, int c) const { return sign[r * 8 + c]; }
    void set_zero(int r, int c) { zero[r * 8 + c] = true; }
    void set_sign(int r, int c, Sign s) { sign[r * 8 + c] = s; }

    /// No constraints at all.
    static StructuralMasks none() { return {}; }

    /// Default domain-knowledge masks: Departures and Arrivals flows evolve
    /// independently of the other facility, and each treatment signal has a
    /// non-negative effect on the speed of the roadway it relieves.
    static StructuralMasks defaults();

    /// Projects a stacked matrix onto the constraint set (entrywise clamp).
    Mat48 project(Mat48 m) const;

    /// True when every zero entry is exactly 0 and every sign constraint
    /// holds within tol.
    bool satisfied_by(const Mat48& m, double tol = 1e-9) const;

    bool operator==(const StructuralMasks&) const = default;
};

struct FitHistogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<std::int64_t> counts;
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;

    double hi() const { return lo + width * static_cast<double>(counts.size()); }
};

struct SolveInfo {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
    bool ridge_fallback = false;
};

/// Validation residual statistics per state plus solver metadata.
struct FitReport {
    Vec4 mae{};
    Vec4 rmse{};
    std::array<FitHistogram, 4> histograms;
    // percentiles[s][k] is the (k+1)-th percentile of state s residuals.
    std::array<std::array<double, 99>, 4> percentiles{};
    std::size_t n_validation = 0;
    SolveInfo solve;

    double percentile(int state, int pct) const;
};

/// Estimated linear dynamics x_{k+1} = A x_k + B u_k with the structural
/// masks it was fitted under. Immutable in practice: fit produces it once.
struct DynamicsModel {
    Mat44 a;
    Mat44 b;
    StructuralMasks masks;
    VolumeScale volume_scale;
    std::optional<FitReport> fit_report;

    /// One deterministic model step, clamped at zero. This is the single
    /// code path shared by the MPC prediction and the plant's noiseless core.
    TrafficState predict(const TrafficState& x, const ControlInput& u) const {
        Vec4 ax = matvec(a, x.vec());
        Vec4 bu = matvec(b, u.vec());
        return TrafficState(ax[0] + bu[0], ax[1] + bu[1], ax[2] + bu[2], ax[3] + bu[3]);
    }

    Mat48 stacked() const;
    static DynamicsModel from_stacked(const Mat48& ab, StructuralMasks masks,
                                      VolumeScale scale = {});

    /// Throws DataError if the matrices violate the masks (zero entries must
    /// be exact, sign entries feasible within tol).
    void validate_masks(double tol = 1e-9) const;
};

}  // namespace landside
