#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "landside/types.hpp"

namespace landside::ingest {

/// One CSV row: measurements, deployed message flags, and passenger counts.
struct RawRecord {
    std::int64_t timestamp = 0;
    double df = 0.0, ds = 0.0, af = 0.0, as = 0.0;
    int td = 0, ta = 0;
    std::int64_t pax_arriving = 0;
    std::int64_t pax_departing = 0;
};

struct GapWarning {
    std::int64_t after_timestamp = 0; // last bin before the gap
    int missing_bins = 0;
};

struct LoadResult {
    std::vector<RawRecord> records;
    std::vector<GapWarning> gaps;
    int bin_minutes = 15;
};

/// Expected CSV header, in order.
extern const char* const kCsvHeader;

/// Loads and validates a measurement CSV. Records come back in timestamp
/// order (out-of-order or duplicate timestamps are schema errors); gaps are
/// reported, not imputed.
LoadResult load_csv(const std::string& path, int bin_minutes = 15);

/// Raw windowed passenger-volume features for a contiguous run of records.
/// av[k] sums pax_arriving over the preceding window_bins bins and dv[k]
/// sums pax_departing over the following window_bins bins, so the first and
/// last window_bins records carry no feature and are dropped.
struct VolumeFeatures {
    int window_bins = 8;
    std::size_t first_index = 0;               // index of first record with a feature
    std::vector<std::pair<double, double>> raw; // (dv_raw, av_raw) per record
    std::size_t dropped_front = 0;
    std::size_t dropped_back = 0;
};

VolumeFeatures build_volume_features(std::span<const RawRecord> records, int window_bins = 8);

/// One regression column: a (x_k, u_k, x_{k+1}) transition. dv/av are raw
/// window sums; normalization happens at split time from the training range.
struct Transition {
    Vec4 x{};
    int td = 0, ta = 0;
    double dv_raw = 0.0, av_raw = 0.0;
    Vec4 y{};
};

/// Assembles transitions from (possibly gapped) records: splits on gaps,
/// windows features per contiguous segment, and pairs consecutive bins.
std::vector<Transition> collect_transitions(std::span<const RawRecord> records,
                                            int bin_minutes = 15, int window_bins = 8);

/// Stacked regression matrices: x_prime columns are [x_k; u_k] (8-vectors),
/// y columns are x_{k+1} (4-vectors).
struct RegressionDataset {
    std::vector<Vec8> x_prime;
    std::vector<Vec4> y;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.8;

    std::size_t size() const { return x_prime.size(); }
};

struct SplitResult {
    RegressionDataset train;
    RegressionDataset validation;
    VolumeScale scale;
    std::vector<std::string> warnings;
};

/// Seeded random train/validation split over whole transitions (a split can
/// never break a (x_k, u_k, x_{k+1}) tuple). DV/AV are min-max normalized
/// using the training columns only. Requires at least 100 transitions.
SplitResult make_regression_dataset(std::span<const Transition> transitions,
                                    double train_fraction, std::uint64_t seed);

/// Convenience overload running collect_transitions first.
SplitResult make_regression_dataset(std::span<const RawRecord> records, int bin_minutes,
                                    int window_bins, double train_fraction,
                                    std::uint64_t seed);

struct ScenarioConfig {
    double congested_threshold = 0.7; // dip: ratio below this
    double normal_threshold = 0.9;    // other facility at onset: ratio at or above this
    int min_duration_bins = 4;        // one hour at 15-minute bins
    double ds_crit = 35.0;            // km/h
    double as_crit = 45.0;            // km/h
    int capture_bins = 16;            // window length kept past onset (exec + horizon)

    void validate() const;
};

/// Finds maximal non-overlapping untreated-congestion windows: one facility's
/// critical ratio below congested_threshold for at least min_duration_bins,
/// the other facility at or above normal_threshold at onset, and no diversion
/// message anywhere in the captured window. base_index offsets onset_index
/// when the series is a segment of a larger record stream.
std::vector<Scenario> extract_scenarios(const TimeSeries& series, const ScenarioConfig& config,
                                        std::int64_t base_index = 0);

/// A contiguous, feature-complete stretch of records lifted into a TimeSeries
/// (dv/av normalized with the supplied scale), plus its absolute base index.
struct SeriesSegment {
    TimeSeries series;
    std::int64_t base_index = 0;
};

/// Builds per-segment series for scenario extraction and evaluation.
std::vector<SeriesSegment> build_series_segments(std::span<const RawRecord> records,
                                                 const VolumeScale& scale,
                                                 int bin_minutes = 15, int window_bins = 8);

}  // namespace landside::ingest
