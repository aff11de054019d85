#include "landside/model.hpp"

#include <cmath>

#include "landside/errors.hpp"

namespace landside {

StructuralMasks StructuralMasks::defaults() {
    StructuralMasks m;
    // Cross-facility flow independence: Departures flow does not see Arrivals
    // flow or speed, and vice versa.
    m.set_zero(kDF, kAF);
    m.set_zero(kDF, kAS);
    m.set_zero(kAF, kDF);
    m.set_zero(kAF, kDS);
    // Treating a roadway must not reduce its own speed.
    m.set_sign(kDS, 4 + kTD, kNonNegative);
    m.set_sign(kAS, 4 + kTA, kNonNegative);
    return m;
}

Mat48 StructuralMasks::project(Mat48 m) const {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 8; ++c) {
            if (zero_at(r, c)) {
                m(r, c) = 0.0;
            } else if (sign_at(r, c) == kNonNegative && m(r, c) < 0.0) {
                m(r, c) = 0.0;
            } else if (sign_at(r, c) == kNonPositive && m(r, c) > 0.0) {
                m(r, c) = 0.0;
            }
        }
    }
    return m;
}

bool StructuralMasks::satisfied_by(const Mat48& m, double tol) const {
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 8; ++c) {
            double v = m(r, c);
            if (zero_at(r, c) && v != 0.0) return false;
            if (sign_at(r, c) == kNonNegative && v < -tol) return false;
            if (sign_at(r, c) == kNonPositive && v > tol) return false;
        }
    }
    return true;
}

double FitReport::percentile(int state, int pct) const {
    if (state < 0 || state > 3 || pct < 1 || pct > 99) {
        throw ConfigError("fit report: percentile index out of range");
    }
    return percentiles[static_cast<std::size_t>(state)][static_cast<std::size_t>(pct - 1)];
}

Mat48 DynamicsModel::stacked() const {
    Mat48 m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m(r, c) = a(r, c);
            m(r, c + 4) = b(r, c);
        }
    }
    return m;
}

DynamicsModel DynamicsModel::from_stacked(const Mat48& ab, StructuralMasks masks,
                                          VolumeScale scale) {
    DynamicsModel model;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            model.a(r, c) = ab(r, c);
            model.b(r, c) = ab(r, c + 4);
        }
    }
    model.masks = masks;
    model.volume_scale = scale;
    return model;
}

void DynamicsModel::validate_masks(double tol) const {
    if (!masks.satisfied_by(stacked(), tol)) {
        throw DataError("dynamics model violates its structural masks");
    }
}

}  // namespace landside
