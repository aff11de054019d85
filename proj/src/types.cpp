#include "landside/types.hpp"

#include <cmath>

namespace landside {

namespace {

double clamp_component(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw DataError(std::string("traffic state component '") + name + "' is not finite");
    }
    return v < 0.0 ? 0.0 : v;
}

}  // namespace

TrafficState::TrafficState(double df, double ds, double af, double as) {
    v_[kDF] = clamp_component(df, "df");
    v_[kDS] = clamp_component(ds, "ds");
    v_[kAF] = clamp_component(af, "af");
    v_[kAS] = clamp_component(as, "as");
}

ControlInput::ControlInput(int td, int ta, double dv, double av) {
    if ((td != 0 && td != 1) || (ta != 0 && ta != 1)) {
        throw DataError("control input: td and ta must be 0 or 1");
    }
    if (td + ta > 1) {
        throw DataError("control input: at most one of td/ta may be active");
    }
    if (!std::isfinite(dv) || !std::isfinite(av)) {
        throw DataError("control input: dv/av must be finite");
    }
    v_[kTD] = static_cast<double>(td);
    v_[kTA] = static_cast<double>(ta);
    v_[kDV] = std::min(1.0, std::max(0.0, dv));
    v_[kAV] = std::min(1.0, std::max(0.0, av));
}

double critical_ratio(double speed_kmh, double critical_speed_kmh) {
    if (!(critical_speed_kmh > 0.0)) {
        throw ConfigError("critical_ratio: critical speed must be positive");
    }
    if (!(speed_kmh >= 0.0)) {
        throw ConfigError("critical_ratio: speed must be non-negative");
    }
    return speed_kmh / critical_speed_kmh;
}

void NoiseModel::validate_ordering() const {
    for (int i = 0; i < 4; ++i) {
        if (!(lo[i] <= hi[i])) {
            throw ConfigError("noise model: lo must not exceed hi");
        }
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
            throw ConfigError("noise model: bounds must be finite");
        }
    }
}

void NoiseModel::validate_straddles_zero() const {
    validate_ordering();
    for (int i = 0; i < 4; ++i) {
        if (lo[i] > 0.0 || hi[i] < 0.0) {
            throw DataError("noise model: residual bounds must straddle zero");
        }
    }
}

double VolumeScale::apply(double raw, double lo, double hi) {
    if (!(hi > lo)) return 0.0;  // degenerate range
    double v = (raw - lo) / (hi - lo);
    return std::min(1.0, std::max(0.0, v));
}

void TimeSeries::validate() const {
    if (states.size() != inputs.size()) {
        throw DataError("time series: states and inputs must have equal length");
    }
    if (bin_minutes <= 0) {
        throw ConfigError("time series: bin_minutes must be positive");
    }
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > states.size()) {
        throw DataError("time series slice out of range");
    }
    TimeSeries out;
    out.start_epoch = timestamp_at(first);
    out.bin_minutes = bin_minutes;
    out.states.assign(states.begin() + first, states.begin() + first + count);
    out.inputs.assign(inputs.begin() + first, inputs.begin() + first + count);
    return out;
}

}  // namespace landside
