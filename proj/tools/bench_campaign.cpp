// Benchmark: serial reference vs OpenMP campaign evaluation on a synthetic
// scenario set, verifying that both produce identical reports.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "landside/eval.hpp"
#include "landside/ingest.hpp"
#include "landside/synth.hpp"

using namespace landside;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

bool reports_equal(const eval::CampaignReport& a, const eval::CampaignReport& b) {
    if (a.scenarios.size() != b.scenarios.size()) return false;
    if (a.veh_hours_low_mean != b.veh_hours_low_mean) return false;
    if (a.veh_hours_high_mean != b.veh_hours_high_mean) return false;
    for (std::size_t i = 0; i < a.scenarios.size(); ++i) {
        const auto& x = a.scenarios[i];
        const auto& y = b.scenarios[i];
        if (x.veh_hours_low != y.veh_hours_low || x.veh_hours_high != y.veh_hours_high)
            return false;
        for (std::size_t k = 0; k < x.treated_ratio.size(); ++k) {
            if (x.treated_ratio[k].mean != y.treated_ratio[k].mean) return false;
            if (x.untreated_ratio[k].mean != y.untreated_ratio[k].mean) return false;
        }
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int episodes = argc > 1 ? std::atoi(argv[1]) : 40;
    int mc_runs = argc > 2 ? std::atoi(argv[2]) : 100;
    int jobs = argc > 3 ? std::atoi(argv[3]) : 0;
#ifdef _OPENMP
    if (jobs <= 0) jobs = omp_get_max_threads();
#else
    if (jobs <= 0) jobs = 1;
#endif

    synth::SynthConfig synth_cfg;
    synth_cfg.seed = 7;
    synth_cfg.episodes = episodes;
    synth_cfg.days = 2 * episodes + 4;
    synth::SynthOutput data = synth::generate(synth_cfg);

    ingest::ScenarioConfig scen_cfg;
    std::vector<Scenario> scenarios;
    for (const auto& segment :
         ingest::build_series_segments(data.records, data.truth.volume_scale)) {
        auto found = ingest::extract_scenarios(segment.series, scen_cfg, segment.base_index);
        scenarios.insert(scenarios.end(), found.begin(), found.end());
    }
    if (scenarios.empty()) {
        std::fprintf(stderr, "no scenarios extracted; nothing to benchmark\n");
        return 1;
    }

    eval::EvalConfig eval_cfg;
    eval_cfg.mc_runs = mc_runs;

    std::printf("campaign: %zu scenarios x %d MC runs, horizon %d\n", scenarios.size(), mc_runs,
                eval_cfg.mpc.horizon_t);

    double t0 = now_ms();
    auto serial = eval::run_campaign_serial(scenarios, data.truth, data.noise, eval_cfg, 99);
    double serial_ms = now_ms() - t0;
    std::printf("serial reference: %9.1f ms\n", serial_ms);

    t0 = now_ms();
    auto parallel = eval::run_campaign(scenarios, data.truth, data.noise, eval_cfg, 99, jobs);
    double parallel_ms = now_ms() - t0;
    std::printf("openmp (%d jobs): %9.1f ms   speedup %.2fx\n", jobs, parallel_ms,
                serial_ms / parallel_ms);

    if (!reports_equal(serial, parallel)) {
        std::fprintf(stderr, "FAIL: parallel report differs from serial reference\n");
        return 1;
    }
    std::printf("reports identical: yes\n");
    return 0;
}
