#include "landside/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "landside/rng.hpp"
#include "landside/timeutil.hpp"

namespace landside::ingest {

const char* const kCsvHeader = "timestamp_utc,df,ds,af,as,td,ta,pax_arriving,pax_departing";

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::int64_t parse_count(const std::string& field, const char* name, std::size_t line_no) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DataError("row " + std::to_string(line_no) + ": '" + name +
                        "' is not an integer: '" + field + "'");
    }
    if (v < 0) {
        throw DataError("row " + std::to_string(line_no) + ": '" + name +
                        "' must be non-negative, got " + field);
    }
    return v;
}

double parse_speed(const std::string& field, const char* name, std::size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(line_no) + ": '" + name +
                        "' is not a decimal: '" + field + "'");
    }
    if (v < 0.0) {
        throw DataError("row " + std::to_string(line_no) + ": '" + name +
                        "' must be non-negative, got " + field);
    }
    return v;
}

int parse_flag(const std::string& field, const char* name, std::size_t line_no) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw DataError("row " + std::to_string(line_no) + ": '" + name + "' must be 0 or 1, got '" +
                    field + "'");
}

}  // namespace

LoadResult load_csv(const std::string& path, int bin_minutes) {
    if (bin_minutes <= 0) throw ConfigError("load_csv: bin_minutes must be positive");
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    LoadResult result;
    result.bin_minutes = bin_minutes;

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw DataError(path + ": header mismatch; expected '" + std::string(kCsvHeader) + "'");
    }

    const std::int64_t bin_seconds = static_cast<std::int64_t>(bin_minutes) * 60;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 9) {
            throw DataError("row " + std::to_string(line_no) + ": expected 9 fields, got " +
                            std::to_string(fields.size()));
        }
        RawRecord rec;
        rec.timestamp = parse_iso8601_utc(fields[0]);
        rec.df = static_cast<double>(parse_count(fields[1], "df", line_no));
        rec.ds = parse_speed(fields[2], "ds", line_no);
        rec.af = static_cast<double>(parse_count(fields[3], "af", line_no));
        rec.as = parse_speed(fields[4], "as", line_no);
        rec.td = parse_flag(fields[5], "td", line_no);
        rec.ta = parse_flag(fields[6], "ta", line_no);
        rec.pax_arriving = parse_count(fields[7], "pax_arriving", line_no);
        rec.pax_departing = parse_count(fields[8], "pax_departing", line_no);

        if (!result.records.empty()) {
            std::int64_t prev = result.records.back().timestamp;
            std::int64_t delta = rec.timestamp - prev;
            if (delta == 0) {
                throw DataError("row " + std::to_string(line_no) + ": duplicate timestamp " +
                                format_iso8601_utc(rec.timestamp));
            }
            if (delta < 0) {
                throw DataError("row " + std::to_string(line_no) +
                                ": timestamps are not monotone increasing");
            }
            if (delta % bin_seconds != 0) {
                throw DataError("row " + std::to_string(line_no) +
                                ": timestamp not aligned to the " + std::to_string(bin_minutes) +
                                "-minute bin grid");
            }
            if (delta > bin_seconds) {
                result.gaps.push_back(
                    {prev, static_cast<int>(delta / bin_seconds - 1)});
            }
        }
        result.records.push_back(rec);
    }
    return result;
}

VolumeFeatures build_volume_features(std::span<const RawRecord> records, int window_bins) {
    if (window_bins <= 0) throw ConfigError("build_volume_features: window_bins must be positive");
    const std::size_t w = static_cast<std::size_t>(window_bins);
    if (records.size() < 2 * w + 1) {
        throw DataError("build_volume_features: need at least " + std::to_string(2 * w + 1) +
                        " contiguous records, got " + std::to_string(records.size()));
    }

    VolumeFeatures out;
    out.window_bins = window_bins;
    out.first_index = w;
    out.dropped_front = w;
    out.dropped_back = w;
    out.raw.reserve(records.size() - 2 * w);
    for (std::size_t k = w; k + w < records.size(); ++k) {
        double av = 0.0;
        for (std::size_t j = k - w; j < k; ++j) {
            av += static_cast<double>(records[j].pax_arriving);
        }
        double dv = 0.0;
        for (std::size_t j = k + 1; j <= k + w; ++j) {
            dv += static_cast<double>(records[j].pax_departing);
        }
        out.raw.emplace_back(dv, av);
    }
    return out;
}

namespace {

// Maximal runs of consecutive timestamps. Assumes records are sorted; the
// loader guarantees that.
std::vector<std::pair<std::size_t, std::size_t>> contiguous_segments(
    std::span<const RawRecord> records, int bin_minutes) {
    const std::int64_t bin_seconds = static_cast<std::int64_t>(bin_minutes) * 60;
    std::vector<std::pair<std::size_t, std::size_t>> segs;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= records.size(); ++i) {
        bool boundary = i == records.size() ||
                        records[i].timestamp - records[i - 1].timestamp != bin_seconds;
        if (boundary) {
            segs.emplace_back(start, i - start);
            start = i;
        }
    }
    return segs;
}

}  // namespace

std::vector<Transition> collect_transitions(std::span<const RawRecord> records, int bin_minutes,
                                            int window_bins) {
    std::vector<Transition> out;
    const std::size_t w = static_cast<std::size_t>(window_bins);
    for (auto [seg_start, seg_len] : contiguous_segments(records, bin_minutes)) {
        if (seg_len < 2 * w + 2) continue;  // too short for a feature-complete transition
        auto seg = records.subspan(seg_start, seg_len);
        VolumeFeatures features = build_volume_features(seg, window_bins);
        // Transition k -> k+1 needs features at k; both bins are inside the
        // segment, so the pair never spans a gap.
        for (std::size_t k = features.first_index; k + 1 + w < seg_len; ++k) {
            const RawRecord& cur = seg[k];
            const RawRecord& nxt = seg[k + 1];
            Transition t;
            t.x = {cur.df, cur.ds, cur.af, cur.as};
            t.y = {nxt.df, nxt.ds, nxt.af, nxt.as};
            t.td = cur.td;
            t.ta = cur.ta;
            auto [dv, av] = features.raw[k - features.first_index];
            t.dv_raw = dv;
            t.av_raw = av;
            out.push_back(t);
        }
    }
    return out;
}

SplitResult make_regression_dataset(std::span<const Transition> transitions,
                                    double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || train_fraction > 1.0) {
        throw ConfigError("make_regression_dataset: train_fraction must be in (0, 1]");
    }
    const std::size_t n = transitions.size();
    if (n < 100) {
        throw DataError("make_regression_dataset: need at least 100 transitions, got " +
                        std::to_string(n));
    }

    // Seeded Fisher-Yates shuffle; the first n_train indices become the
    // training set. Indices are re-sorted so columns stay in time order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(idx[i], idx[j]);
    }
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);

    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
    std::vector<std::size_t> val_idx(idx.begin() + n_train, idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    SplitResult result;
    if (val_idx.empty()) {
        result.warnings.push_back("train_fraction 1.0 leaves the validation set empty");
    }

    // Normalization constants from the training columns only.
    double dv_min = std::numeric_limits<double>::infinity(), dv_max = -dv_min;
    double av_min = dv_min, av_max = -dv_min;
    for (std::size_t i : train_idx) {
        dv_min = std::min(dv_min, transitions[i].dv_raw);
        dv_max = std::max(dv_max, transitions[i].dv_raw);
        av_min = std::min(av_min, transitions[i].av_raw);
        av_max = std::max(av_max, transitions[i].av_raw);
    }
    result.scale = VolumeScale{dv_min, dv_max, av_min, av_max};

    auto fill = [&](const std::vector<std::size_t>& which, RegressionDataset& ds) {
        ds.split_seed = seed;
        ds.train_fraction = train_fraction;
        ds.x_prime.reserve(which.size());
        ds.y.reserve(which.size());
        for (std::size_t i : which) {
            const Transition& t = transitions[i];
            ControlInput u(t.td, t.ta, result.scale.apply_dv(t.dv_raw),
                           result.scale.apply_av(t.av_raw));
            Vec8 col;
            for (int c = 0; c < 4; ++c) col[static_cast<std::size_t>(c)] = t.x[static_cast<std::size_t>(c)];
            for (int c = 0; c < 4; ++c) col[static_cast<std::size_t>(4 + c)] = u.vec()[static_cast<std::size_t>(c)];
            ds.x_prime.push_back(col);
            ds.y.push_back(t.y);
        }
    };
    fill(train_idx, result.train);
    fill(val_idx, result.validation);
    return result;
}

SplitResult make_regression_dataset(std::span<const RawRecord> records, int bin_minutes,
                                    int window_bins, double train_fraction,
                                    std::uint64_t seed) {
    auto transitions = collect_transitions(records, bin_minutes, window_bins);
    return make_regression_dataset(transitions, train_fraction, seed);
}

void ScenarioConfig::validate() const {
    if (!(congested_threshold > 0.0) || !(normal_threshold > congested_threshold)) {
        throw ConfigError("scenario config: need 0 < congested_threshold < normal_threshold");
    }
    if (min_duration_bins < 1) throw ConfigError("scenario config: min_duration_bins must be >= 1");
    if (!(ds_crit > 0.0) || !(as_crit > 0.0)) {
        throw ConfigError("scenario config: critical speeds must be positive");
    }
    if (capture_bins < min_duration_bins) {
        throw ConfigError("scenario config: capture_bins must cover min_duration_bins");
    }
}

std::vector<Scenario> extract_scenarios(const TimeSeries& series, const ScenarioConfig& config,
                                        std::int64_t base_index) {
    config.validate();
    series.validate();
    const std::size_t n = series.size();
    std::vector<Scenario> out;
    if (n == 0) return out;

    auto ratio_of = [&](std::size_t i, Facility f) {
        double crit = f == Facility::Departures ? config.ds_crit : config.as_crit;
        return critical_ratio(series.states[i].speed(f), crit);
    };
    auto message_active = [&](std::size_t i) {
        return series.inputs[i].td() != 0 || series.inputs[i].ta() != 0;
    };

    std::size_t blocked_until = 0;  // enforce non-overlap between accepted windows
    for (std::size_t i = 0; i < n; ++i) {
        if (i < blocked_until) continue;
        for (Facility fac : {Facility::Departures, Facility::Arrivals}) {
            if (ratio_of(i, fac) >= config.congested_threshold) continue;
            if (i > 0 && ratio_of(i - 1, fac) < config.congested_threshold) continue;  // not an onset

            // Measure the maximal dip run from this onset.
            std::size_t run_end = i;
            while (run_end < n && ratio_of(run_end, fac) < config.congested_threshold) ++run_end;
            std::size_t dip_len = run_end - i;
            if (dip_len < static_cast<std::size_t>(config.min_duration_bins)) continue;
            if (ratio_of(i, other_facility(fac)) < config.normal_threshold) continue;

            std::size_t want = std::max<std::size_t>(dip_len,
                                                     static_cast<std::size_t>(config.capture_bins));
            std::size_t window_len = std::min(want, n - i);
            bool treated = false;
            for (std::size_t j = i; j < i + window_len; ++j) {
                if (message_active(j)) {
                    treated = true;
                    break;
                }
            }
            if (treated) continue;

            Scenario s;
            s.window = series.slice(i, window_len);
            s.congested_facility = fac;
            s.onset_index = base_index + static_cast<std::int64_t>(i);
            s.dip_bins = static_cast<int>(dip_len);
            s.label = std::string(facility_name(fac)) + " dip at " +
                      format_iso8601_utc(series.timestamp_at(i)) + " (" +
                      std::to_string(dip_len) + " bins)";
            out.push_back(std::move(s));
            blocked_until = i + window_len;
            break;
        }
    }
    return out;
}

std::vector<SeriesSegment> build_series_segments(std::span<const RawRecord> records,
                                                 const VolumeScale& scale, int bin_minutes,
                                                 int window_bins) {
    std::vector<SeriesSegment> out;
    const std::size_t w = static_cast<std::size_t>(window_bins);
    for (auto [seg_start, seg_len] : contiguous_segments(records, bin_minutes)) {
        if (seg_len < 2 * w + 1) continue;
        auto seg = records.subspan(seg_start, seg_len);
        VolumeFeatures features = build_volume_features(seg, window_bins);

        SeriesSegment segment;
        segment.base_index = static_cast<std::int64_t>(seg_start + features.first_index);
        segment.series.bin_minutes = bin_minutes;
        segment.series.start_epoch = seg[features.first_index].timestamp;
        for (std::size_t k = 0; k < features.raw.size(); ++k) {
            const RawRecord& rec = seg[features.first_index + k];
            segment.series.states.emplace_back(rec.df, rec.ds, rec.af, rec.as);
            auto [dv, av] = features.raw[k];
            segment.series.inputs.emplace_back(rec.td, rec.ta, scale.apply_dv(dv),
                                               scale.apply_av(av));
        }
        out.push_back(std::move(segment));
    }
    return out;
}

}  // namespace landside::ingest
