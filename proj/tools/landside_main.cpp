// Command-line front end: synthesize data, fit dynamics, run closed-loop
// control, and evaluate counterfactual campaigns.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "landside/eval.hpp"
#include "landside/ingest.hpp"
#include "landside/json_io.hpp"
#include "landside/mpc.hpp"
#include "landside/plant.hpp"
#include "landside/rng.hpp"
#include "landside/synth.hpp"
#include "landside/sysid.hpp"
#include "landside/timeutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace landside;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct CommonOptions {
    std::uint64_t seed = 42;
    std::string config_path;
    std::string out_dir = ".";
    int jobs = 1;
    int verbosity = 0;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + std::string(e.what()));
    }
    return doc;
}

// Applies config[section] onto the given fields; unknown keys are errors so
// typos do not silently fall back to defaults.
template <typename Fn>
void apply_section(const json& config, const char* section, Fn&& apply_key) {
    if (!config.contains(section)) return;
    const json& sec = config[section];
    if (!sec.is_object()) throw ConfigError(std::string("config section '") + section +
                                            "' must be an object");
    for (const auto& [key, value] : sec.items()) {
        if (!apply_key(key, value)) {
            throw ConfigError(std::string("config: unknown key '") + section + "." + key + "'");
        }
    }
}

struct FitOptions {
    sysid::FitConfig fit;
    double train_fraction = 0.8;
    int low_pct = 10;
    int high_pct = 90;
};

FitOptions fit_options_from(const json& config) {
    FitOptions opt;
    apply_section(config, "fit", [&](const std::string& key, const json& v) {
        if (key == "rho") opt.fit.rho = v.get<double>();
        else if (key == "max_iters") opt.fit.max_iters = v.get<int>();
        else if (key == "abs_tol") opt.fit.abs_tol = v.get<double>();
        else if (key == "rel_tol") opt.fit.rel_tol = v.get<double>();
        else if (key == "admm_penalty") opt.fit.admm_penalty = v.get<double>();
        else if (key == "train_fraction") opt.train_fraction = v.get<double>();
        else if (key == "low_pct") opt.low_pct = v.get<int>();
        else if (key == "high_pct") opt.high_pct = v.get<int>();
        else return false;
        return true;
    });
    return opt;
}

mpc::MpcConfig mpc_config_from(const json& config) {
    mpc::MpcConfig cfg;
    apply_section(config, "mpc", [&](const std::string& key, const json& v) {
        if (key == "horizon_t") cfg.horizon_t = v.get<int>();
        else if (key == "exec_steps") cfg.exec_steps = v.get<int>();
        else if (key == "ds_crit") cfg.ds_crit = v.get<double>();
        else if (key == "as_crit") cfg.as_crit = v.get<double>();
        else if (key == "gamma") cfg.gamma = v.get<double>();
        else return false;
        return true;
    });
    return cfg;
}

eval::EvalConfig eval_config_from(const json& config) {
    eval::EvalConfig cfg;
    cfg.mpc = mpc_config_from(config);
    apply_section(config, "eval", [&](const std::string& key, const json& v) {
        if (key == "bottleneck_km_low") cfg.bottleneck_km_low = v.get<double>();
        else if (key == "bottleneck_km_high") cfg.bottleneck_km_high = v.get<double>();
        else if (key == "idle_fuel_gal_per_hr") cfg.idle_fuel_gal_per_hr = v.get<double>();
        else if (key == "idle_co2_g_per_hr") cfg.idle_co2_g_per_hr = v.get<double>();
        else if (key == "mc_runs") cfg.mc_runs = v.get<int>();
        else return false;
        return true;
    });
    return cfg;
}

struct IngestOptions {
    int bin_minutes = 15;
    int window_bins = 8;  // two hours at the bin size
};

IngestOptions ingest_options_from(const json& config) {
    IngestOptions opt;
    bool window_given = false;
    apply_section(config, "ingest", [&](const std::string& key, const json& v) {
        if (key == "bin_minutes") opt.bin_minutes = v.get<int>();
        else if (key == "window_bins") {
            opt.window_bins = v.get<int>();
            window_given = true;
        } else {
            return false;
        }
        return true;
    });
    if (opt.bin_minutes <= 0) throw ConfigError("ingest.bin_minutes must be positive");
    if (!window_given) {
        if (120 % opt.bin_minutes != 0) {
            throw ConfigError("ingest.bin_minutes must divide the two-hour feature window");
        }
        opt.window_bins = 120 / opt.bin_minutes;
    }
    if (opt.window_bins <= 0) throw ConfigError("ingest.window_bins must be positive");
    return opt;
}

ingest::ScenarioConfig scenario_config_from(const json& config, const mpc::MpcConfig& mpc_cfg) {
    ingest::ScenarioConfig cfg;
    cfg.ds_crit = mpc_cfg.ds_crit;
    cfg.as_crit = mpc_cfg.as_crit;
    cfg.capture_bins = mpc_cfg.horizon_t + mpc_cfg.exec_steps;
    apply_section(config, "scenario", [&](const std::string& key, const json& v) {
        if (key == "congested_threshold") cfg.congested_threshold = v.get<double>();
        else if (key == "normal_threshold") cfg.normal_threshold = v.get<double>();
        else if (key == "min_duration_bins") cfg.min_duration_bins = v.get<int>();
        else if (key == "capture_bins") cfg.capture_bins = v.get<int>();
        else return false;
        return true;
    });
    return cfg;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

int cmd_synth(const CommonOptions& common, const synth::SynthConfig& base) {
    synth::SynthConfig cfg = base;
    cfg.seed = common.seed;
    cfg.validate();
    ensure_out_dir(common.out_dir);

    synth::SynthOutput out = synth::generate(cfg);
    synth::write_dataset_csv(join(common.out_dir, "dataset.csv"), out.records);
    io::write_model_json(join(common.out_dir, "truth_model.json"), out.truth);
    io::write_noise_json(join(common.out_dir, "truth_noise.json"), out.noise);
    io::write_injections_json(join(common.out_dir, "injections.json"), out.injections);
    if (common.verbosity > 0) {
        std::cout << "synth: " << out.records.size() << " bins, " << out.injections.size()
                  << " injected episodes -> " << common.out_dir << "\n";
    }
    return 0;
}

int cmd_train(const CommonOptions& common, const std::string& data_path, const FitOptions& opt,
              const IngestOptions& ingest_opt) {
    opt.fit.validate();
    if (!(opt.train_fraction > 0.0) || opt.train_fraction > 1.0) {
        throw ConfigError("train: train_fraction must be in (0, 1]");
    }
    ensure_out_dir(common.out_dir);

    ingest::LoadResult loaded = ingest::load_csv(data_path, ingest_opt.bin_minutes);
    if (!loaded.gaps.empty()) {
        int missing = 0;
        for (const auto& gap : loaded.gaps) missing += gap.missing_bins;
        std::cerr << "warning: " << loaded.gaps.size() << " gap(s) covering " << missing
                  << " missing bin(s); transitions spanning gaps are excluded\n";
    }

    ingest::SplitResult split = ingest::make_regression_dataset(
        loaded.records, loaded.bin_minutes, ingest_opt.window_bins, opt.train_fraction,
        common.seed);
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";

    DynamicsModel model = sysid::fit(split.train, opt.fit);
    model.volume_scale = split.scale;

    FitReport report = sysid::evaluate(model, split.validation);
    model.fit_report = report;
    NoiseModel noise =
        sysid::calibrate_noise(report, opt.low_pct, opt.high_pct, derive_seed(common.seed, 1));

    io::write_model_json(join(common.out_dir, "model.json"), model);
    io::write_fit_report_json(join(common.out_dir, "fit_report.json"), report);
    io::write_noise_json(join(common.out_dir, "noise.json"), noise);
    if (common.verbosity > 0) {
        std::cout << "train: " << split.train.size() << " train / " << split.validation.size()
                  << " validation columns, " << report.solve.iterations << " ADMM iterations\n";
    }
    return 0;
}

int cmd_control(const CommonOptions& common, const std::string& model_path,
                const std::string& noise_path, const std::string& state_csv, int steps,
                double dv, double av, const mpc::MpcConfig& mpc_cfg) {
    mpc_cfg.validate();
    if (steps < 1) throw ConfigError("control: steps must be >= 1");
    ensure_out_dir(common.out_dir);

    DynamicsModel model = io::read_model_json(model_path);
    NoiseModel noise = noise_path.empty() ? NoiseModel::zero(common.seed)
                                          : io::read_noise_json(noise_path);
    noise.seed = common.seed;

    double vals[4];
    if (std::sscanf(state_csv.c_str(), "%lf,%lf,%lf,%lf", &vals[0], &vals[1], &vals[2],
                    &vals[3]) != 4) {
        throw ConfigError("control: --state must be 'df,ds,af,as'");
    }
    TrafficState x_init(vals[0], vals[1], vals[2], vals[3]);

    mpc::MpcConfig cfg = mpc_cfg;
    cfg.exo_forecast.assign(static_cast<std::size_t>(steps - 1 + cfg.horizon_t), {dv, av});

    PlantStepper plant(model, noise, common.seed);
    mpc::ClosedLoopTrace trace = mpc::receding_horizon(x_init, model, plant, cfg, steps);
    io::write_trace_json(join(common.out_dir, "trace.json"), trace);
    if (common.verbosity > 0) {
        int active = 0;
        for (const auto& s : trace.steps) active += s.action.active();
        std::cout << "control: " << trace.steps.size() << " steps, " << active
                  << " active signals\n";
    }
    return 0;
}

int cmd_evaluate(const CommonOptions& common, const std::string& data_path,
                 const std::string& model_path, const std::string& noise_path,
                 const eval::EvalConfig& eval_cfg, const ingest::ScenarioConfig& scen_cfg,
                 const IngestOptions& ingest_opt) {
    eval_cfg.validate();
    scen_cfg.validate();
    ensure_out_dir(common.out_dir);

    DynamicsModel model = io::read_model_json(model_path);
    NoiseModel noise = io::read_noise_json(noise_path);
    ingest::LoadResult loaded = ingest::load_csv(data_path, ingest_opt.bin_minutes);

    std::vector<Scenario> scenarios;
    for (const auto& segment :
         ingest::build_series_segments(loaded.records, model.volume_scale, loaded.bin_minutes,
                                       ingest_opt.window_bins)) {
        auto found = ingest::extract_scenarios(segment.series, scen_cfg, segment.base_index);
        scenarios.insert(scenarios.end(), found.begin(), found.end());
    }
    // Windows clipped by the end of the series cannot host a full rollout.
    std::erase_if(scenarios, [&](const Scenario& s) {
        return s.window.size() <
               static_cast<std::size_t>(eval_cfg.mpc.exec_steps + eval_cfg.mpc.horizon_t);
    });

    io::write_scenarios_json(join(common.out_dir, "scenarios.json"), scenarios);

    eval::CampaignReport report;  // empty campaign stays a valid report
    if (!scenarios.empty()) {
        report = eval::run_campaign(scenarios, model, noise, eval_cfg, common.seed, common.jobs);
    }
    io::write_campaign_report_json(join(common.out_dir, "report.json"), report, common.seed,
                                   eval_cfg.mc_runs);
    io::write_speed_ratio_csv(join(common.out_dir, "speed_ratio_by_step.csv"), report);
    io::write_vehicle_hours_csv(join(common.out_dir, "vehicle_hours.csv"), report);
    if (common.verbosity > 0) {
        std::cout << "evaluate: " << scenarios.size() << " scenarios, mean saved "
                  << report.veh_hours_low_mean << " to " << report.veh_hours_high_mean
                  << " veh-h per hour\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Airport landside congestion control: model fitting, predictive control "
                 "of diversion messages, and counterfactual evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    CommonOptions common;
    app.add_option("--seed", common.seed, "Global RNG seed")->capture_default_str();
    app.add_option("--config", common.config_path, "JSON config file");
    app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", common.jobs, "Worker threads for scenario evaluation")
        ->capture_default_str();
    app.add_flag("-v,--verbose", common.verbosity, "Verbose progress output");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset and ground truth");
    int synth_days = 60, synth_episodes = 20;
    bool synth_no_messages = false;
    synth_cmd->add_option("--days", synth_days, "Days of data")->capture_default_str();
    synth_cmd->add_option("--episodes", synth_episodes, "Injected congestion episodes")
        ->capture_default_str();
    synth_cmd->add_flag("--no-messages", synth_no_messages,
                        "Do not scatter historical message deployments");

    auto* train_cmd = app.add_subcommand("train", "Fit the dynamics model from a dataset CSV");
    std::string train_data;
    double train_rho = -1.0;  // sentinel: keep config/default
    train_cmd->add_option("--data", train_data, "Dataset CSV path")->required();
    train_cmd->add_option("--rho", train_rho, "Row-group regularization weight");

    auto* control_cmd =
        app.add_subcommand("control", "One receding-horizon run from a given start state");
    std::string control_model, control_noise, control_state;
    int control_steps = 4;
    double control_dv = 0.5, control_av = 0.5;
    control_cmd->add_option("--model", control_model, "Model JSON path")->required();
    control_cmd->add_option("--noise", control_noise, "Noise JSON path (omit for zero noise)");
    control_cmd->add_option("--state", control_state, "Initial state 'df,ds,af,as'")->required();
    control_cmd->add_option("--steps", control_steps, "Closed-loop steps")->capture_default_str();
    control_cmd->add_option("--dv", control_dv, "Constant DV forecast")->capture_default_str();
    control_cmd->add_option("--av", control_av, "Constant AV forecast")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("evaluate", "Counterfactual campaign on a dataset");
    std::string eval_data, eval_model, eval_noise;
    int eval_mc_runs = -1;  // sentinel
    eval_cmd->add_option("--data", eval_data, "Dataset CSV path")->required();
    eval_cmd->add_option("--model", eval_model, "Model JSON path")->required();
    eval_cmd->add_option("--noise", eval_noise, "Noise JSON path")->required();
    eval_cmd->add_option("--mc-runs", eval_mc_runs, "Monte-Carlo runs per scenario");

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(common.config_path);
        if (common.jobs < 1) throw ConfigError("--jobs must be >= 1");

        if (synth_cmd->parsed()) {
            synth::SynthConfig cfg;
            cfg.days = synth_days;
            cfg.episodes = synth_episodes;
            cfg.deploy_messages = !synth_no_messages;
            apply_section(config, "synth", [&](const std::string& key, const json& v) {
                if (key == "days") cfg.days = v.get<int>();
                else if (key == "episodes") cfg.episodes = v.get<int>();
                else if (key == "episode_dip_ratio") cfg.episode_dip_ratio = v.get<double>();
                else if (key == "episode_min_bins") cfg.episode_min_bins = v.get<int>();
                else if (key == "episode_max_bins") cfg.episode_max_bins = v.get<int>();
                else if (key == "deploy_messages") cfg.deploy_messages = v.get<bool>();
                else return false;
                return true;
            });
            return cmd_synth(common, cfg);
        }
        if (train_cmd->parsed()) {
            FitOptions opt = fit_options_from(config);
            if (train_cmd->count("--rho") > 0) opt.fit.rho = train_rho;
            return cmd_train(common, train_data, opt, ingest_options_from(config));
        }
        if (control_cmd->parsed()) {
            return cmd_control(common, control_model, control_noise, control_state,
                               control_steps, control_dv, control_av, mpc_config_from(config));
        }
        if (eval_cmd->parsed()) {
            eval::EvalConfig cfg = eval_config_from(config);
            if (eval_mc_runs > 0) cfg.mc_runs = eval_mc_runs;
            return cmd_evaluate(common, eval_data, eval_model, eval_noise, cfg,
                                scenario_config_from(config, cfg.mpc), ingest_options_from(config));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
