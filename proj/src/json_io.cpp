#include "landside/json_io.hpp"

#include <fstream>

#include <json.hpp>

#include "landside/errors.hpp"
#include "landside/timeutil.hpp"

namespace landside::io {

namespace {

using nlohmann::json;

json load_json_file(const std::string& path, const char* expected_kind) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
        doc["format_version"].get<int>() != kFormatVersion) {
        throw DataError(path + ": unsupported or missing format_version (expected " +
                        std::to_string(kFormatVersion) + ")");
    }
    if (!doc.contains("kind") || doc["kind"].get<std::string>() != expected_kind) {
        throw DataError(path + ": expected a '" + expected_kind + "' document");
    }
    return doc;
}

void dump_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failure on file: " + path);
}

json mat44_to_json(const Mat44& m) {
    return json(std::vector<double>(m.a.begin(), m.a.end()));
}

Mat44 mat44_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 16) {
        throw DataError(std::string("model: '") + name + "' must be 16 numbers (row-major)");
    }
    Mat44 m;
    for (std::size_t i = 0; i < 16; ++i) m.a[i] = j[i].get<double>();
    return m;
}

json state_to_json(const TrafficState& s) {
    return json{{"df", s.df()}, {"ds", s.ds()}, {"af", s.af()}, {"as", s.as()}};
}

json step_stat_to_json(const eval::StepStat& s) {
    return json{{"mean", s.mean}, {"se", s.se}};
}

json scenario_result_to_json(const eval::ScenarioResult& r) {
    json treated = json::array();
    json untreated = json::array();
    for (const auto& s : r.treated_ratio) treated.push_back(step_stat_to_json(s));
    for (const auto& s : r.untreated_ratio) untreated.push_back(step_stat_to_json(s));
    return json{{"facility", facility_name(r.treated)},
                {"onset_index", r.onset_index},
                {"mc_runs", r.mc_runs},
                {"treated_ratio", treated},
                {"untreated_ratio", untreated},
                {"veh_hours_low", r.veh_hours_low},
                {"veh_hours_high", r.veh_hours_high},
                {"fuel_gal_low", r.savings.fuel_gal_low},
                {"fuel_gal_high", r.savings.fuel_gal_high},
                {"co2_kg_low", r.savings.co2_kg_low},
                {"co2_kg_high", r.savings.co2_kg_high}};
}

}  // namespace

void write_model_json(const std::string& path, const DynamicsModel& model) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.model";
    doc["a"] = mat44_to_json(model.a);
    doc["b"] = mat44_to_json(model.b);
    doc["eq_mask"] = json(std::vector<bool>(model.masks.zero.begin(), model.masks.zero.end()));
    doc["sign_mask"] =
        json(std::vector<int>(model.masks.sign.begin(), model.masks.sign.end()));
    doc["volume_scale"] = json{{"dv_min", model.volume_scale.dv_min},
                               {"dv_max", model.volume_scale.dv_max},
                               {"av_min", model.volume_scale.av_min},
                               {"av_max", model.volume_scale.av_max}};
    if (model.fit_report) {
        const FitReport& r = *model.fit_report;
        doc["fit_report"] = json{
            {"mae", std::vector<double>(r.mae.begin(), r.mae.end())},
            {"rmse", std::vector<double>(r.rmse.begin(), r.rmse.end())},
            {"n_validation", r.n_validation},
            {"iterations", r.solve.iterations},
            {"primal_residual", r.solve.primal_residual},
            {"dual_residual", r.solve.dual_residual},
            {"objective", r.solve.objective},
            {"converged", r.solve.converged},
            {"ridge_fallback", r.solve.ridge_fallback}};
    }
    dump_json_file(path, doc);
}

DynamicsModel read_model_json(const std::string& path) {
    json doc = load_json_file(path, "landside.model");
    DynamicsModel model;
    model.a = mat44_from_json(doc.at("a"), "a");
    model.b = mat44_from_json(doc.at("b"), "b");
    const auto& eq = doc.at("eq_mask");
    const auto& sign = doc.at("sign_mask");
    if (!eq.is_array() || eq.size() != 32 || !sign.is_array() || sign.size() != 32) {
        throw DataError(path + ": masks must be 32 entries (row-major 4x8)");
    }
    for (std::size_t i = 0; i < 32; ++i) {
        model.masks.zero[i] = eq[i].get<bool>();
        int s = sign[i].get<int>();
        if (s < -1 || s > 1) throw DataError(path + ": sign mask entries must be -1, 0, or 1");
        model.masks.sign[i] = static_cast<std::int8_t>(s);
    }
    const auto& vs = doc.at("volume_scale");
    model.volume_scale = VolumeScale{vs.at("dv_min").get<double>(), vs.at("dv_max").get<double>(),
                                     vs.at("av_min").get<double>(), vs.at("av_max").get<double>()};
    if (doc.contains("fit_report")) {
        const auto& fr = doc["fit_report"];
        FitReport report;
        for (std::size_t i = 0; i < 4; ++i) {
            report.mae[i] = fr.at("mae").at(i).get<double>();
            report.rmse[i] = fr.at("rmse").at(i).get<double>();
        }
        report.n_validation = fr.at("n_validation").get<std::size_t>();
        report.solve.iterations = fr.at("iterations").get<int>();
        report.solve.primal_residual = fr.at("primal_residual").get<double>();
        report.solve.dual_residual = fr.at("dual_residual").get<double>();
        report.solve.objective = fr.at("objective").get<double>();
        report.solve.converged = fr.at("converged").get<bool>();
        report.solve.ridge_fallback = fr.at("ridge_fallback").get<bool>();
        model.fit_report = report;
    }
    model.validate_masks();
    return model;
}

void write_noise_json(const std::string& path, const NoiseModel& noise) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.noise";
    doc["lo"] = std::vector<double>(noise.lo.begin(), noise.lo.end());
    doc["hi"] = std::vector<double>(noise.hi.begin(), noise.hi.end());
    doc["seed"] = noise.seed;
    dump_json_file(path, doc);
}

NoiseModel read_noise_json(const std::string& path) {
    json doc = load_json_file(path, "landside.noise");
    NoiseModel noise;
    const auto& lo = doc.at("lo");
    const auto& hi = doc.at("hi");
    if (!lo.is_array() || lo.size() != 4 || !hi.is_array() || hi.size() != 4) {
        throw DataError(path + ": lo/hi must be 4-vectors");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        noise.lo[i] = lo[i].get<double>();
        noise.hi[i] = hi[i].get<double>();
    }
    noise.seed = doc.value("seed", std::uint64_t{0});
    noise.validate_straddles_zero();
    return noise;
}

void write_scenarios_json(const std::string& path, std::span<const Scenario> scenarios) {
    // Bare array by contract: [{start, end, facility, onset_index}].
    json arr = json::array();
    for (const auto& s : scenarios) {
        arr.push_back(json{
            {"start", format_iso8601_utc(s.window.timestamp_at(0))},
            {"end", format_iso8601_utc(s.window.timestamp_at(s.window.size()))},
            {"facility", facility_name(s.congested_facility)},
            {"onset_index", s.onset_index}});
    }
    dump_json_file(path, arr);
}

void write_fit_report_json(const std::string& path, const FitReport& report) {
    static const char* kStateNames[4] = {"df", "ds", "af", "as"};
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.fit_report";
    doc["n_validation"] = report.n_validation;
    json states = json::object();
    for (std::size_t s = 0; s < 4; ++s) {
        const FitHistogram& h = report.histograms[s];
        states[kStateNames[s]] = json{
            {"mae", report.mae[s]},
            {"rmse", report.rmse[s]},
            {"percentiles",
             std::vector<double>(report.percentiles[s].begin(), report.percentiles[s].end())},
            {"histogram", json{{"lo", h.lo},
                               {"width", h.width},
                               {"counts", h.counts},
                               {"underflow", h.underflow},
                               {"overflow", h.overflow}}}};
    }
    doc["states"] = states;
    doc["solver"] = json{{"iterations", report.solve.iterations},
                         {"primal_residual", report.solve.primal_residual},
                         {"dual_residual", report.solve.dual_residual},
                         {"objective", report.solve.objective},
                         {"converged", report.solve.converged},
                         {"ridge_fallback", report.solve.ridge_fallback}};
    dump_json_file(path, doc);
}

void write_trace_json(const std::string& path, const mpc::ClosedLoopTrace& trace) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.trace";
    doc["x_init"] = state_to_json(trace.x_init);
    json bins = json::array();
    for (const auto& step : trace.steps) {
        bins.push_back(json{{"state", state_to_json(step.state)},
                            {"action", json{{"td", step.action.td}, {"ta", step.action.ta}}},
                            {"solve_cost", step.solve_cost},
                            {"solve_ms", step.solve_ms}});
    }
    doc["bins"] = bins;
    dump_json_file(path, doc);
}

void write_campaign_report_json(const std::string& path, const eval::CampaignReport& report,
                                std::uint64_t seed, int mc_runs) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.report";
    doc["seed"] = seed;
    doc["mc_runs"] = mc_runs;
    doc["n_scenarios"] = report.scenarios.size();

    json panels = json::object();
    for (const auto& panel : report.panels) {
        json steps = json::array();
        for (const auto& s : panel.steps) {
            steps.push_back(json{{"treated", step_stat_to_json(s.treated)},
                                 {"untreated", step_stat_to_json(s.untreated)}});
        }
        const char* key = panel.treated == Facility::Departures ? "departures_treated"
                                                                : "arrivals_treated";
        panels[key] = json{{"n_scenarios", panel.n_scenarios}, {"steps", steps}};
    }
    doc["panels"] = panels;
    doc["vehicle_hours"] = json{
        {"low", json{{"mean", report.veh_hours_low_mean},
                     {"q1", report.veh_hours_low_iqr.q1},
                     {"q3", report.veh_hours_low_iqr.q3}}},
        {"high", json{{"mean", report.veh_hours_high_mean},
                      {"q1", report.veh_hours_high_iqr.q1},
                      {"q3", report.veh_hours_high_iqr.q3}}}};
    json scenarios = json::array();
    for (const auto& r : report.scenarios) scenarios.push_back(scenario_result_to_json(r));
    doc["scenarios"] = scenarios;
    dump_json_file(path, doc);
}

void write_speed_ratio_csv(const std::string& path, const eval::CampaignReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "# landside speed-ratio-by-step v" << kFormatVersion << "\n";
    out << "facility,step,treated_mean,treated_se,untreated_mean,untreated_se\n";
    char buf[256];
    for (const auto& panel : report.panels) {
        for (std::size_t k = 0; k < panel.steps.size(); ++k) {
            const auto& s = panel.steps[k];
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%.17g\n",
                          facility_name(panel.treated), k + 1, s.treated.mean, s.treated.se,
                          s.untreated.mean, s.untreated.se);
            out << buf;
        }
    }
}

void write_vehicle_hours_csv(const std::string& path, const eval::CampaignReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "# landside vehicle-hours v" << kFormatVersion << "\n";
    out << "scenario,facility,onset_index,veh_hours_low,veh_hours_high,fuel_gal_low,"
           "fuel_gal_high,co2_kg_low,co2_kg_high\n";
    char buf[320];
    for (std::size_t i = 0; i < report.scenarios.size(); ++i) {
        const auto& r = report.scenarios[i];
        std::snprintf(buf, sizeof(buf), "%zu,%s,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                      facility_name(r.treated), static_cast<long long>(r.onset_index),
                      r.veh_hours_low, r.veh_hours_high, r.savings.fuel_gal_low,
                      r.savings.fuel_gal_high, r.savings.co2_kg_low, r.savings.co2_kg_high);
        out << buf;
    }
}

void write_injections_json(const std::string& path,
                           std::span<const synth::Injection> injections) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["kind"] = "landside.injections";
    json arr = json::array();
    for (const auto& inj : injections) {
        arr.push_back(json{{"facility", facility_name(inj.facility)},
                           {"start_index", inj.start_index},
                           {"bins", inj.bins}});
    }
    doc["injections"] = arr;
    dump_json_file(path, doc);
}

}  // namespace landside::io
