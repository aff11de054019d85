#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "landside/eval.hpp"
#include "landside/ingest.hpp"
#include "landside/json_io.hpp"
#include "landside/synth.hpp"
#include "landside/sysid.hpp"

using namespace landside;

namespace {

synth::SynthConfig quick_synth(std::uint64_t seed, int days, int episodes) {
    synth::SynthConfig cfg;
    cfg.seed = seed;
    cfg.days = days;
    cfg.episodes = episodes;
    return cfg;
}

std::vector<Scenario> extract_all(const synth::SynthOutput& data,
                                  const ingest::ScenarioConfig& cfg = {}) {
    std::vector<Scenario> scenarios;
    for (const auto& seg : ingest::build_series_segments(data.records, data.truth.volume_scale)) {
        auto found = ingest::extract_scenarios(seg.series, cfg, seg.base_index);
        scenarios.insert(scenarios.end(), found.begin(), found.end());
    }
    return scenarios;
}

}  // namespace

TEST_CASE("synthetic generation is seed-deterministic") {
    auto a = synth::generate(quick_synth(42, 12, 4));
    auto b = synth::generate(quick_synth(42, 12, 4));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].timestamp == b.records[i].timestamp);
        CHECK(a.records[i].df == b.records[i].df);
        CHECK(a.records[i].ds == b.records[i].ds);
        CHECK(a.records[i].pax_departing == b.records[i].pax_departing);
    }
    CHECK(a.truth.a == b.truth.a);
    CHECK(a.truth.b == b.truth.b);

    auto c = synth::generate(quick_synth(43, 12, 4));
    bool any_diff = false;
    for (std::size_t i = 0; i < a.records.size() && !any_diff; ++i) {
        any_diff = a.records[i].ds != c.records[i].ds;
    }
    CHECK(any_diff);
}

TEST_CASE("dataset CSV round-trips losslessly") {
    testutil::TempDir dir("csv");
    auto data = synth::generate(quick_synth(11, 8, 2));
    synth::write_dataset_csv(dir.file("d.csv"), data.records);
    auto loaded = ingest::load_csv(dir.file("d.csv"));
    REQUIRE(loaded.records.size() == data.records.size());
    CHECK(loaded.gaps.size() == 7);  // one overnight gap per day boundary
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        CHECK(loaded.records[i].timestamp == data.records[i].timestamp);
        CHECK(loaded.records[i].df == data.records[i].df);
        CHECK(loaded.records[i].ds == data.records[i].ds);
        CHECK(loaded.records[i].as == data.records[i].as);
        CHECK(loaded.records[i].td == data.records[i].td);
        CHECK(loaded.records[i].pax_arriving == data.records[i].pax_arriving);
    }
}

TEST_CASE("episode-free synthesis yields no extractable scenarios") {
    auto data = synth::generate(quick_synth(21, 20, 0));
    CHECK(extract_all(data).empty());
}

TEST_CASE("injected episodes are recovered by extraction") {
    auto data = synth::generate(quick_synth(33, 30, 12));
    auto scenarios = extract_all(data);
    REQUIRE(scenarios.size() >= 11);  // at least 11 of 12

    int matched = 0;
    for (const auto& inj : data.injections) {
        for (const auto& s : scenarios) {
            if (s.congested_facility == inj.facility &&
                std::llabs(s.onset_index - inj.start_index) <= 1) {
                ++matched;
                break;
            }
        }
    }
    CHECK(matched >= 11);

    int dep = 0, arr = 0;
    for (const auto& s : scenarios) {
        (s.congested_facility == Facility::Departures ? dep : arr)++;
    }
    CHECK(dep >= 5);
    CHECK(arr >= 5);
}

TEST_CASE("train pipeline recovers the generator within declared tolerances") {
    auto data = synth::generate(quick_synth(7, 90, 0));
    auto split = ingest::make_regression_dataset(data.records, 15, 8, 0.8, 11);

    sysid::FitConfig cfg;  // defaults: rho 0.1, beta multiplier 1.0
    DynamicsModel model = sysid::fit(split.train, cfg);
    model.volume_scale = split.scale;

    CHECK(split.scale == data.truth.volume_scale);
    REQUIRE(model.fit_report.has_value());
    CHECK(model.fit_report->solve.converged);
    CHECK(model.fit_report->solve.iterations <= 5000);

    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            CHECK(std::abs(model.a(r, c) - data.truth.a(r, c)) <= 0.08);
        }
        for (int c : {kTD, kTA}) {
            CHECK(std::abs(model.b(r, c) - data.truth.b(r, c)) <= 2.0);
        }
        for (int c : {kDV, kAV}) {
            CHECK(std::abs(model.b(r, c) - data.truth.b(r, c)) <= 10.0);
        }
    }

    FitReport report = sysid::evaluate(model, split.validation);
    NoiseModel noise = sysid::calibrate_noise(report);
    // Calibrated bounds stay in the ballpark of the generating noise.
    for (int i = 0; i < 4; ++i) {
        auto s = static_cast<std::size_t>(i);
        CHECK(noise.lo[s] < 0.0);
        CHECK(noise.hi[s] > 0.0);
        CHECK(noise.lo[s] >= 2.0 * data.noise.lo[s]);
        CHECK(noise.hi[s] <= 2.0 * data.noise.hi[s]);
    }
}

TEST_CASE("model JSON persistence round-trips bit-exactly and checks versions") {
    testutil::TempDir dir("json");
    auto data = synth::generate(quick_synth(3, 8, 2));
    DynamicsModel model = data.truth;
    FitReport report;
    report.mae = {1.25, 0.5, 2.0, 0.75};
    report.rmse = {2.0, 1.0, 3.0, 1.5};
    report.n_validation = 123;
    report.solve.iterations = 42;
    report.solve.converged = true;
    model.fit_report = report;

    io::write_model_json(dir.file("m.json"), model);
    DynamicsModel back = io::read_model_json(dir.file("m.json"));
    CHECK(back.a == model.a);
    CHECK(back.b == model.b);
    CHECK(back.masks == model.masks);
    CHECK(back.volume_scale == model.volume_scale);
    REQUIRE(back.fit_report.has_value());
    CHECK(back.fit_report->mae == report.mae);
    CHECK(back.fit_report->solve.iterations == 42);

    // Version gate.
    std::string text = testutil::read_text(dir.file("m.json"));
    auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 19, "\"format_version\": 9");
    testutil::write_text(dir.file("bad.json"), text);
    CHECK_THROWS_AS(io::read_model_json(dir.file("bad.json")), DataError);

    // Kind gate: a noise file is not a model.
    io::write_noise_json(dir.file("n.json"), data.noise);
    CHECK_THROWS_AS(io::read_model_json(dir.file("n.json")), DataError);
}

TEST_CASE("noise JSON round-trips and rejects non-straddling bounds") {
    testutil::TempDir dir("noise");
    NoiseModel noise;
    noise.lo = {-34.6, -2.9, -43.3, -3.5};
    noise.hi = {38.5, 3.4, 46.5, 3.9};
    noise.seed = 7;
    io::write_noise_json(dir.file("n.json"), noise);
    NoiseModel back = io::read_noise_json(dir.file("n.json"));
    CHECK(back.lo == noise.lo);
    CHECK(back.hi == noise.hi);
    CHECK(back.seed == 7);

    NoiseModel bad = noise;
    bad.lo[1] = 0.5;  // does not straddle zero
    io::write_noise_json(dir.file("bad.json"), bad);
    CHECK_THROWS_AS(io::read_noise_json(dir.file("bad.json")), DataError);
}

TEST_CASE("scenario JSON uses the bare-array contract") {
    testutil::TempDir dir("scen");
    auto data = synth::generate(quick_synth(5, 14, 4));
    auto scenarios = extract_all(data);
    REQUIRE(!scenarios.empty());
    io::write_scenarios_json(dir.file("s.json"), scenarios);
    std::string text = testutil::read_text(dir.file("s.json"));
    CHECK(text.front() == '[');
    CHECK(text.find("\"facility\"") != std::string::npos);
    CHECK(text.find("\"onset_index\"") != std::string::npos);
    CHECK(text.find("\"start\"") != std::string::npos);
}

TEST_CASE("full evaluate pipeline on a synthetic campaign") {
    auto data = synth::generate(quick_synth(13, 26, 10));
    auto scenarios = extract_all(data);
    REQUIRE(scenarios.size() >= 9);

    eval::EvalConfig cfg;
    cfg.mc_runs = 4;
    auto report = eval::run_campaign(scenarios, data.truth, data.noise, cfg, 99, 2);
    CHECK(report.scenarios.size() == scenarios.size());
    CHECK(report.veh_hours_high_mean == 4.0 * report.veh_hours_low_mean);
    // Treated facility improves on average; untreated stays near parity.
    for (const auto& panel : report.panels) {
        if (panel.n_scenarios == 0) continue;
        CHECK(panel.steps.front().treated.mean > 1.0);
        CHECK(panel.steps.front().untreated.mean > 0.9);
    }
}

TEST_CASE("trace JSON carries per-bin state, action, cost, and timing") {
    testutil::TempDir dir("trace");
    DynamicsModel m;
    m.a = Mat44::identity();
    mpc::ClosedLoopTrace trace;
    trace.x_init = TrafficState(400, 40, 400, 50);
    trace.steps.push_back({TrafficState(390, 41, 400, 50), {1, 0}, 0.25, 1.5});
    trace.steps.push_back({TrafficState(395, 42, 401, 51), {0, 0}, 0.125, 0.75});
    io::write_trace_json(dir.file("t.json"), trace);
    std::string text = testutil::read_text(dir.file("t.json"));
    for (const char* needle :
         {"\"format_version\"", "\"x_init\"", "\"bins\"", "\"state\"", "\"action\"",
          "\"solve_cost\"", "\"solve_ms\"", "\"td\"", "\"ds\""}) {
        CHECK(text.find(needle) != std::string::npos);
    }
}

TEST_CASE("every extracted scenario re-verifies its own defining predicate") {
    auto data = synth::generate(quick_synth(57, 30, 12));
    ingest::ScenarioConfig cfg;
    auto scenarios = extract_all(data, cfg);
    REQUIRE(!scenarios.empty());

    for (const auto& s : scenarios) {
        double crit = s.congested_facility == Facility::Departures ? cfg.ds_crit : cfg.as_crit;
        double other_crit =
            s.congested_facility == Facility::Departures ? cfg.as_crit : cfg.ds_crit;
        // Congested below threshold for at least the minimum duration.
        for (int k = 0; k < cfg.min_duration_bins; ++k) {
            double speed = s.window.states[static_cast<std::size_t>(k)].speed(s.congested_facility);
            CHECK(critical_ratio(speed, crit) < cfg.congested_threshold);
        }
        // Other facility normal at onset.
        double other_speed = s.window.states[0].speed(other_facility(s.congested_facility));
        CHECK(critical_ratio(other_speed, other_crit) >= cfg.normal_threshold);
        // Untreated throughout the captured window.
        for (const auto& u : s.window.inputs) CHECK(u.td() + u.ta() == 0);
        // Dip run length is faithful.
        CHECK(s.dip_bins >= cfg.min_duration_bins);
    }
}
