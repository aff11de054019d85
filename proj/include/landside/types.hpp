#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landside/errors.hpp"
#include "landside/linalg.hpp"

namespace landside {

// State component indices, fixed everywhere: [DF, DS, AF, AS].
enum StateIndex : int { kDF = 0, kDS = 1, kAF = 2, kAS = 3 };
// Input component indices, fixed everywhere: [TD, TA, DV, AV].
enum InputIndex : int { kTD = 0, kTA = 1, kDV = 2, kAV = 3 };

enum class Facility { Departures, Arrivals };

inline const char* facility_name(Facility f) {
    return f == Facility::Departures ? "Departures" : "Arrivals";
}
inline Facility other_facility(Facility f) {
    return f == Facility::Departures ? Facility::Arrivals : Facility::Departures;
}

/// Macroscopic roadway state at one time bin: Departures flow/speed and
/// Arrivals flow/speed. Immutable after construction. Negative components
/// are clamped to zero; non-finite components are rejected.
class TrafficState {
public:
    TrafficState() = default;
    TrafficState(double df, double ds, double af, double as);

    /// Builds a state from a raw 4-vector with the same clamping rules.
    static TrafficState from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

    double df() const { return v_[kDF]; }
    double ds() const { return v_[kDS]; }
    double af() const { return v_[kAF]; }
    double as() const { return v_[kAS]; }

    double flow(Facility f) const { return f == Facility::Departures ? df() : af(); }
    double speed(Facility f) const { return f == Facility::Departures ? ds() : as(); }

    const Vec4& vec() const { return v_; }

    bool operator==(const TrafficState&) const = default;

private:
    Vec4 v_{};
};

/// Diversion signals plus exogenous normalized passenger-volume features.
/// At most one of TD/TA may be active. DV/AV are clamped into [0, 1].
class ControlInput {
public:
    ControlInput() = default;
    ControlInput(int td, int ta, double dv, double av);

    int td() const { return static_cast<int>(v_[kTD]); }
    int ta() const { return static_cast<int>(v_[kTA]); }
    double dv() const { return v_[kDV]; }
    double av() const { return v_[kAV]; }

    const Vec4& vec() const { return v_; }

    bool operator==(const ControlInput&) const = default;

private:
    Vec4 v_{};
};

/// speed / critical_speed. Values well below 1 indicate congestion.
double critical_ratio(double speed_kmh, double critical_speed_kmh);

/// Per-state uniform residual bounds for the stochastic plant.
/// Calibration guarantees lo[i] <= 0 <= hi[i]; direct construction does not,
/// so degenerate bounds (lo == hi) can be used for deterministic tests.
struct NoiseModel {
    Vec4 lo{};
    Vec4 hi{};
    std::uint64_t seed = 0;

    static NoiseModel zero(std::uint64_t seed = 0) { return NoiseModel{{}, {}, seed}; }

    /// Checks lo <= hi per state; throws ConfigError otherwise.
    void validate_ordering() const;
    /// Checks lo <= 0 <= hi per state; throws DataError otherwise.
    void validate_straddles_zero() const;
};

/// Min/max scaling constants for the DV/AV features. Fitted on training
/// data and stored with the model so prediction uses the same mapping.
struct VolumeScale {
    double dv_min = 0.0, dv_max = 1.0;
    double av_min = 0.0, av_max = 1.0;

    /// Maps a raw windowed sum into [0, 1]; clamps out-of-range inputs.
    /// A degenerate range (min == max) maps everything to 0.
    double apply_dv(double raw) const { return apply(raw, dv_min, dv_max); }
    double apply_av(double raw) const { return apply(raw, av_min, av_max); }

    bool operator==(const VolumeScale&) const = default;

private:
    static double apply(double raw, double lo, double hi);
};

/// Uniformly binned series of states and aligned inputs.
struct TimeSeries {
    std::int64_t start_epoch = 0;
    int bin_minutes = 15;
    std::vector<TrafficState> states;
    std::vector<ControlInput> inputs;

    std::size_t size() const { return states.size(); }
    std::int64_t timestamp_at(std::size_t i) const {
        return start_epoch + static_cast<std::int64_t>(i) * 60 * bin_minutes;
    }

    /// Throws DataError unless states and inputs have equal length.
    void validate() const;

    /// Copies bins [first, first + count).
    TimeSeries slice(std::size_t first, std::size_t count) const;
};

/// A contiguous window of observed untreated congestion, used as the
/// grounding example for counterfactual evaluation.
struct Scenario {
    TimeSeries window;            // onset at window index 0, plus lookahead slack
    Facility congested_facility = Facility::Departures;
    std::int64_t onset_index = 0; // bin index of the onset in the source series
    int dip_bins = 0;             // consecutive bins below the congested threshold
    std::string label;
};

}  // namespace landside
