#include "landside/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "landside/rng.hpp"
#include "landside/timeutil.hpp"

namespace landside::synth {

namespace {

// Bimodal daily passenger-volume profile in [0, 1]: morning and evening
// peaks joined by a midday plateau over a small overnight base.
double daily_profile(double hour) {
    double m = std::exp(-std::pow((hour - 8.0) / 2.1, 2));
    double e = std::exp(-std::pow((hour - 16.5) / 2.6, 2));
    double mid = std::exp(-std::pow((hour - 12.5) / 3.8, 2));
    double v = 0.04 + 0.45 * m + 0.52 * e + 0.50 * mid;
    return std::min(1.0, v);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

// Ground-truth autoregressive block. Cross-facility flow terms honor the
// default zero mask; the spectral radius sits near 0.55.
Mat44 truth_a() {
    Mat44 a;
    a(kDF, kDF) = 0.50;  a(kDF, kDS) = 1.10;
    a(kDS, kDF) = -0.004; a(kDS, kDS) = 0.60; a(kDS, kAS) = 0.03;
    a(kAF, kAF) = 0.52;  a(kAF, kAS) = 1.00;
    a(kAS, kDS) = 0.04;  a(kAS, kAF) = -0.003; a(kAS, kAS) = 0.58;
    return a;
}

// Treatment columns: a diversion moves flow toward the other roadway and
// lifts the treated roadway's speed.
void fill_treatment_columns(Mat44& b) {
    b(kDF, kTD) = -30.0; b(kDS, kTD) = 6.0;  b(kAF, kTD) = 16.0;  b(kAS, kTD) = -1.0;
    b(kDF, kTA) = 14.0;  b(kDS, kTA) = -1.2; b(kAF, kTA) = -26.0; b(kAS, kTA) = 5.0;
}

}  // namespace

void SynthConfig::validate() const {
    if (days < 3) throw ConfigError("synth config: need at least 3 days");
    if (episodes < 0) throw ConfigError("synth config: episodes must be non-negative");
    if (bin_minutes <= 0 || 1440 % bin_minutes != 0 || bin_minutes > 15) {
        throw ConfigError("synth config: bin_minutes must divide a day and be at most 15");
    }
    if (!(episode_dip_ratio > 0.0) || !(episode_dip_ratio < 0.7)) {
        throw ConfigError("synth config: episode_dip_ratio must sit below the congested threshold");
    }
    if (episode_min_bins < 4 || episode_max_bins < episode_min_bins) {
        throw ConfigError("synth config: episode length range invalid");
    }
    if (episodes > 0 && days < 2 * episodes + 3) {
        throw ConfigError("synth config: " + std::to_string(episodes) + " episodes need at least " +
                          std::to_string(2 * episodes + 3) + " days");
    }
}

SynthOutput generate(const SynthConfig& config) {
    config.validate();
    const int bins_per_day = 1440 / config.bin_minutes;
    const int w = (2 * 60) / config.bin_minutes;  // two-hour feature window

    // Sensors record the operational day only (05:30 to 23:30). The nightly
    // gap keeps recorded transitions away from the overnight near-zero
    // regime, where the clamp at zero would bend the otherwise linear
    // process, while the morning ramp and evening decline stay in view and
    // give the regression transient excitation.
    const int record_start = 330 / config.bin_minutes;   // 05:30
    const int record_end = 1410 / config.bin_minutes;    // 23:30
    const int seg_len = record_end - record_start;

    // Passenger counts: the shared daily profile scaled by a seeded per-bin
    // fluctuation (flight banking). The fast fluctuation is what separates
    // the volume features from the quasi-static traffic response, so the
    // regression can tell A's columns from B's.
    const int n_sim = config.days * bins_per_day;
    std::vector<std::int64_t> pax_dep(static_cast<std::size_t>(n_sim));
    std::vector<std::int64_t> pax_arr(static_cast<std::size_t>(n_sim));
    Rng pax_rng(derive_seed(config.seed, 0x70617857));  // "paxW"
    for (int t = 0; t < n_sim; ++t) {
        double hour = static_cast<double>(t % bins_per_day) * config.bin_minutes / 60.0;
        double base = daily_profile(hour);
        double wd = pax_rng.uniform(0.65, 1.35);
        double wa = pax_rng.uniform(0.65, 1.35);
        pax_dep[static_cast<std::size_t>(t)] = std::llround(2400.0 * base * wd);
        pax_arr[static_cast<std::size_t>(t)] = std::llround(2600.0 * base * wa);
    }

    // Per-segment feature sums, exactly as ingestion recomputes them:
    // backward pax_arriving sums, forward pax_departing sums, first and last
    // w bins of each segment dropped. Indexed by simulation bin; NaN marks
    // bins without a in-segment feature.
    std::vector<double> dv_raw(static_cast<std::size_t>(n_sim),
                               std::numeric_limits<double>::quiet_NaN());
    std::vector<double> av_raw(static_cast<std::size_t>(n_sim),
                               std::numeric_limits<double>::quiet_NaN());
    for (int day = 0; day < config.days; ++day) {
        const int seg_base = day * bins_per_day + record_start;
        for (int k = w; k + w < seg_len; ++k) {
            double dv = 0.0, av = 0.0;
            for (int j = 1; j <= w; ++j) {
                dv += static_cast<double>(pax_dep[static_cast<std::size_t>(seg_base + k + j)]);
                av += static_cast<double>(pax_arr[static_cast<std::size_t>(seg_base + k - j)]);
            }
            dv_raw[static_cast<std::size_t>(seg_base + k)] = dv;
            av_raw[static_cast<std::size_t>(seg_base + k)] = av;
        }
    }

    // Scale over the transition bins (the last feature bin of each segment
    // pairs with a feature-dropped successor and never reaches a training
    // column).
    VolumeScale scale;
    scale.dv_min = std::numeric_limits<double>::infinity();
    scale.dv_max = -scale.dv_min;
    scale.av_min = scale.dv_min;
    scale.av_max = -scale.dv_min;
    for (int day = 0; day < config.days; ++day) {
        const int seg_base = day * bins_per_day + record_start;
        for (int k = w; k + 1 + w < seg_len; ++k) {
            auto i = static_cast<std::size_t>(seg_base + k);
            scale.dv_min = std::min(scale.dv_min, dv_raw[i]);
            scale.dv_max = std::max(scale.dv_max, dv_raw[i]);
            scale.av_min = std::min(scale.av_min, av_raw[i]);
            scale.av_max = std::max(scale.av_max, av_raw[i]);
        }
    }

    // Ground-truth model. The DV/AV columns are solved so the average
    // late-morning operating point is an equilibrium; flows lean on their
    // own facility's volume while speeds take an even blend, keeping the two
    // facilities' speed ratios moving together.
    const Vec4 day_state = {420.0, 42.0, 430.0, 54.0};
    const int anchor_bod = 600 / config.bin_minutes;  // 10:00
    double dv0 = 0.0, av0 = 0.0;
    for (int day = 0; day < config.days; ++day) {
        auto i = static_cast<std::size_t>(day * bins_per_day + anchor_bod);
        dv0 += scale.apply_dv(dv_raw[i]);
        av0 += scale.apply_av(av_raw[i]);
    }
    dv0 /= config.days;
    av0 /= config.days;

    DynamicsModel truth;
    truth.a = truth_a();
    fill_treatment_columns(truth.b);
    Vec4 gap = day_state;
    Vec4 ax = matvec(truth.a, day_state);
    for (std::size_t i = 0; i < 4; ++i) gap[i] -= ax[i];
    const Vec4 dv_share = {0.85, 0.50, 0.15, 0.50};
    for (int s = 0; s < 4; ++s) {
        auto i = static_cast<std::size_t>(s);
        truth.b(s, kDV) = round4(dv_share[i] * gap[i] / dv0);
        truth.b(s, kAV) = round4((1.0 - dv_share[i]) * gap[i] / av0);
    }
    truth.masks = StructuralMasks::defaults();
    truth.volume_scale = scale;
    truth.validate_masks();

    NoiseModel noise;
    noise.lo = {-11.0, -2.6, -12.0, -2.8};
    noise.hi = {12.5, 3.0, 11.5, 3.2};
    noise.seed = config.seed;

    SynthOutput out;
    out.truth = truth;
    out.noise = noise;

    // Message deployments (odd days) and congestion episodes (even days)
    // never collide; episodes alternate facility for an even split.
    std::vector<int> td(static_cast<std::size_t>(n_sim), 0), ta(static_cast<std::size_t>(n_sim), 0);
    const int morning_bod = 570 / config.bin_minutes;    // 09:30
    const int afternoon_bod = 900 / config.bin_minutes;  // 15:00
    if (config.deploy_messages) {
        for (int day = 1; day < config.days; day += 2) {
            int base = day * bins_per_day;
            if (day % 4 == 1) {
                td[static_cast<std::size_t>(base + morning_bod)] = 1;
                td[static_cast<std::size_t>(base + morning_bod + 1)] = 1;
            } else {
                ta[static_cast<std::size_t>(base + afternoon_bod)] = 1;
                ta[static_cast<std::size_t>(base + afternoon_bod + 1)] = 1;
            }
        }
    }

    struct EpisodePlan {
        Facility facility;
        int sim_start;  // simulation bin index
        int bins;
    };
    std::vector<EpisodePlan> plans;
    for (int i = 0; i < config.episodes; ++i) {
        EpisodePlan p;
        p.facility = (i % 2 == 0) ? Facility::Departures : Facility::Arrivals;
        int day = 2 + 2 * i;
        int start_bod = morning_bod + (i * 3) % 6;
        p.sim_start = day * bins_per_day + start_bod;
        int span = config.episode_max_bins - config.episode_min_bins + 1;
        p.bins = config.episode_min_bins + (i % span);
        plans.push_back(p);
        // The injection log indexes into the recorded stream.
        out.injections.push_back(
            {p.facility, day * seg_len + (start_bod - record_start), p.bins});
    }
    auto episode_at = [&](int t) -> const EpisodePlan* {
        for (const auto& p : plans) {
            if (t >= p.sim_start && t < p.sim_start + p.bins) return &p;
        }
        return nullptr;
    };

    // Normalized features for any simulation bin. Recorded feature-complete
    // bins use the in-segment sums (bit-identical to what training will
    // compute); segment edges and overnight bins fall back to wrapped sums,
    // which only steer unrecorded or feature-dropped transitions.
    auto features_at = [&](int t) -> std::pair<double, double> {
        auto ti = static_cast<std::size_t>(t);
        if (!std::isnan(dv_raw[ti])) {
            return {scale.apply_dv(dv_raw[ti]), scale.apply_av(av_raw[ti])};
        }
        double dv = 0.0, av = 0.0;
        for (int j = 1; j <= w; ++j) {
            dv += static_cast<double>(
                pax_dep[static_cast<std::size_t>(((t + j) % n_sim + n_sim) % n_sim)]);
            av += static_cast<double>(
                pax_arr[static_cast<std::size_t>(((t - j) % n_sim + n_sim) % n_sim)]);
        }
        return {scale.apply_dv(dv), scale.apply_av(av)};
    };

    // Simulate the ground-truth process around the clock; record the
    // operational day. Flow counts round to integers and speeds to 1e-4 so
    // the CSV round-trips losslessly.
    Rng rng(derive_seed(config.seed, 0x73796e74));  // "synt"
    Vec4 x = day_state;
    out.records.reserve(static_cast<std::size_t>(config.days * seg_len));
    const std::int64_t bin_seconds = static_cast<std::int64_t>(config.bin_minutes) * 60;
    for (int t = 0; t < n_sim; ++t) {
        auto ti = static_cast<std::size_t>(t);
        int bod = t % bins_per_day;
        if (bod >= record_start && bod < record_end) {
            ingest::RawRecord rec;
            rec.timestamp = config.start_epoch + t * bin_seconds;
            rec.df = x[kDF];
            rec.ds = x[kDS];
            rec.af = x[kAF];
            rec.as = x[kAS];
            rec.td = td[ti];
            rec.ta = ta[ti];
            rec.pax_arriving = pax_arr[ti];
            rec.pax_departing = pax_dep[ti];
            out.records.push_back(rec);
        }

        if (t + 1 == n_sim) break;
        auto [dv, av] = features_at(t);
        ControlInput u(td[ti], ta[ti], dv, av);
        Vec4 ax_t = matvec(truth.a, x);
        Vec4 bu_t = matvec(truth.b, u.vec());
        Vec4 next;
        for (std::size_t i = 0; i < 4; ++i) {
            next[i] = std::max(0.0, ax_t[i] + bu_t[i] + rng.uniform(noise.lo[i], noise.hi[i]));
        }
        if (const EpisodePlan* ep = episode_at(t + 1)) {
            // Forced dip, recorded as a disturbance on the facility's speed.
            int j = t + 1 - ep->sim_start;
            double crit = ep->facility == Facility::Departures ? 35.0 : 45.0;
            double wobble = 1.0 + 0.08 * std::sin(2.0 * M_PI * j / ep->bins);
            double target = config.episode_dip_ratio * crit * wobble;
            next[ep->facility == Facility::Departures ? kDS : kAS] = target;
        }
        next[kDF] = static_cast<double>(std::llround(next[kDF]));
        next[kAF] = static_cast<double>(std::llround(next[kAF]));
        next[kDS] = round4(next[kDS]);
        next[kAS] = round4(next[kAS]);
        x = next;
    }
    return out;
}

void write_dataset_csv(const std::string& path, std::span<const ingest::RawRecord> records) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write dataset file: " + path);
    file << ingest::kCsvHeader << '\n';
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%lld,%.4f,%lld,%.4f,%d,%d,%lld,%lld\n",
                      format_iso8601_utc(r.timestamp).c_str(),
                      static_cast<long long>(std::llround(r.df)), r.ds,
                      static_cast<long long>(std::llround(r.af)), r.as, r.td, r.ta,
                      static_cast<long long>(r.pax_arriving),
                      static_cast<long long>(r.pax_departing));
        file << buf;
    }
    if (!file) throw DataError("write failure on dataset file: " + path);
}

}  // namespace landside::synth
