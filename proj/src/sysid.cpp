#include "landside/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace landside::sysid {

void FitConfig::validate() const {
    if (!(rho >= 0.0)) throw ConfigError("fit config: rho must be non-negative");
    if (max_iters < 1) throw ConfigError("fit config: max_iters must be positive");
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw ConfigError("fit config: tolerances must be positive");
    }
    if (!(admm_penalty > 0.0)) throw ConfigError("fit config: admm_penalty must be positive");
}

Vec8 row_group_prox(const Vec8& row, double threshold) {
    if (threshold < 0.0) throw ConfigError("row_group_prox: threshold must be non-negative");
    double nrm = norm2(row);
    if (nrm <= threshold) return Vec8{};
    double scale = 1.0 - threshold / nrm;
    Vec8 out;
    for (std::size_t i = 0; i < 8; ++i) out[i] = scale * row[i];
    return out;
}

double fit_objective(const Mat48& ab, const ingest::RegressionDataset& data, double rho) {
    double fidelity = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        Vec4 pred = matvec(ab, data.x_prime[k]);
        for (int s = 0; s < 4; ++s) {
            double r = data.y[k][static_cast<std::size_t>(s)] - pred[static_cast<std::size_t>(s)];
            fidelity += r * r;
        }
    }
    double penalty = 0.0;
    for (int r = 0; r < 4; ++r) penalty += norm2(ab.row(static_cast<std::size_t>(r)));
    return 0.5 * fidelity + rho * penalty;
}

namespace {

double frob2(const Mat48& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return s;
}

}  // namespace

DynamicsModel fit(const ingest::RegressionDataset& train, const FitConfig& config) {
    config.validate();
    const std::size_t n = train.size();
    if (n < 8) {
        throw DataError("fit: need at least 8 training columns, got " + std::to_string(n));
    }

    // Gram and cross matrices; the per-iteration solve then costs O(1).
    Mat88 gram;
    Mat48 cross;
    for (std::size_t k = 0; k < n; ++k) {
        const Vec8& x = train.x_prime[k];
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = i; j < 8; ++j) gram(i, j) += x[i] * x[j];
        }
        for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t j = 0; j < 8; ++j) cross(r, j) += train.y[k][r] * x[j];
        }
    }
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < i; ++j) gram(i, j) = gram(j, i);
    }

    SolveInfo info;
    try {
        (void)cholesky(gram);
    } catch (const SolverError&) {
        // Rank-deficient data; nudge the Gram diagonal and carry on.
        info.ridge_fallback = true;
        for (std::size_t i = 0; i < 8; ++i) gram(i, i) += 1e-8;
    }

    // The penalty rides on the RMS regressor magnitude: raw-unit data (flows
    // in the hundreds) and unit-scale data then condition the splitting
    // equally well. The statistic is fixed for the whole run, and the ADMM
    // fixed point does not depend on the penalty value.
    double energy = 0.0;
    for (std::size_t i = 0; i < 8; ++i) energy += gram(i, i);
    const double beta =
        config.admm_penalty * std::max(std::sqrt(energy / (8.0 * static_cast<double>(n))), 1e-12);
    Mat88 regularized = gram;
    for (std::size_t i = 0; i < 8; ++i) regularized(i, i) += beta;
    const Mat88 factor = cholesky(regularized);

    // Consensus ADMM over three blocks: smooth least squares (W), row-group
    // prox (Z), mask projection (V), tied to the consensus variable `agg`.
    Mat48 w, z, v, agg;       // blocks and consensus, all start at zero
    Mat48 u1, u2, u3;         // scaled duals
    const double sqrt_dim = std::sqrt(3.0 * 32.0);

    double primal = 0.0, dual = 0.0;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= config.max_iters; ++iter) {
        // W-update: W (G + beta I) = cross + beta (agg - u1), solved per row.
        for (std::size_t r = 0; r < 4; ++r) {
            Vec8 rhs;
            for (std::size_t c = 0; c < 8; ++c) {
                rhs[c] = cross(r, c) + beta * (agg(r, c) - u1(r, c));
            }
            w.set_row(r, cholesky_solve(factor, rhs));
        }
        // Z-update: row-wise shrink of (agg - u2).
        for (std::size_t r = 0; r < 4; ++r) {
            Vec8 row;
            for (std::size_t c = 0; c < 8; ++c) row[c] = agg(r, c) - u2(r, c);
            z.set_row(r, row_group_prox(row, config.rho / beta));
        }
        // V-update: exact entrywise projection of (agg - u3).
        v = config.masks.project(agg - u3);

        Mat48 agg_prev = agg;
        agg = (w + u1 + z + u2 + v + u3) * (1.0 / 3.0);
        u1 += w - agg;
        u2 += z - agg;
        u3 += v - agg;

        primal = std::sqrt(frob2(w - agg) + frob2(z - agg) + frob2(v - agg));
        dual = beta * std::sqrt(3.0) * std::sqrt(frob2(agg - agg_prev));

        double block_norm = std::sqrt(frob2(w) + frob2(z) + frob2(v));
        double consensus_norm = std::sqrt(3.0) * std::sqrt(frob2(agg));
        double eps_pri = sqrt_dim * config.abs_tol +
                         config.rel_tol * std::max(block_norm, consensus_norm);
        double eps_dual = sqrt_dim * config.abs_tol +
                          config.rel_tol * beta *
                              std::sqrt(frob2(u1) + frob2(u2) + frob2(u3));

        if (config.iter_observer) {
            config.iter_observer(iter, fit_objective(config.masks.project(z), train, config.rho),
                                 primal, dual);
        }
        if (primal <= eps_pri && dual <= eps_dual) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        throw SolverError("fit: ADMM did not converge in " + std::to_string(config.max_iters) +
                              " iterations (primal " + std::to_string(primal) + ", dual " +
                              std::to_string(dual) + ")",
                          primal, dual);
    }

    // Report the prox block so annihilated rows come out exactly zero; the
    // final hard projection makes the masks exact on output.
    Mat48 solution = config.masks.project(z);

    DynamicsModel model = DynamicsModel::from_stacked(solution, config.masks);
    info.iterations = std::min(iter, config.max_iters);
    info.primal_residual = primal;
    info.dual_residual = dual;
    info.objective = fit_objective(solution, train, config.rho);
    info.converged = converged;
    FitReport report;
    report.solve = info;
    model.fit_report = report;
    return model;
}

namespace {

FitHistogram make_histogram(std::span<const double> values, double lo, double width, int bins) {
    FitHistogram h;
    h.lo = lo;
    h.width = width;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        double pos = (v - lo) / width;
        if (pos < 0.0) {
            ++h.underflow;
        } else if (pos >= static_cast<double>(bins)) {
            ++h.overflow;
        } else {
            ++h.counts[static_cast<std::size_t>(pos)];
        }
    }
    return h;
}

double percentile_sorted(std::span<const double> sorted, double pct) {
    // Linear interpolation between closest ranks.
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = pct / 100.0 * static_cast<double>(n - 1);
    std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= n) return sorted[n - 1];
    double frac = h - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

FitReport evaluate(const DynamicsModel& model, const ingest::RegressionDataset& validation) {
    const std::size_t n = validation.size();
    if (n == 0) throw DataError("evaluate: validation set is empty");

    FitReport report;
    if (model.fit_report) report.solve = model.fit_report->solve;
    report.n_validation = n;

    Mat48 ab = model.stacked();
    std::array<std::vector<double>, 4> residuals;
    for (auto& r : residuals) r.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Vec4 pred = matvec(ab, validation.x_prime[k]);
        for (std::size_t s = 0; s < 4; ++s) {
            residuals[s].push_back(validation.y[k][s] - pred[s]);
        }
    }

    for (std::size_t s = 0; s < 4; ++s) {
        double abs_sum = 0.0, sq_sum = 0.0;
        for (double r : residuals[s]) {
            abs_sum += std::abs(r);
            sq_sum += r * r;
        }
        report.mae[s] = abs_sum / static_cast<double>(n);
        report.rmse[s] = std::sqrt(sq_sum / static_cast<double>(n));

        bool is_flow = s == kDF || s == kAF;
        report.histograms[s] = is_flow ? make_histogram(residuals[s], -100.0, 5.0, 40)
                                       : make_histogram(residuals[s], -15.0, 0.5, 60);

        std::vector<double> sorted = residuals[s];
        std::sort(sorted.begin(), sorted.end());
        for (int p = 1; p <= 99; ++p) {
            report.percentiles[s][static_cast<std::size_t>(p - 1)] =
                percentile_sorted(sorted, static_cast<double>(p));
        }
    }
    return report;
}

NoiseModel calibrate_noise(const FitReport& report, int low_pct, int high_pct,
                           std::uint64_t seed) {
    if (low_pct < 1 || high_pct > 99 || low_pct >= high_pct) {
        throw ConfigError("calibrate_noise: need 1 <= low_pct < high_pct <= 99");
    }
    if (report.n_validation == 0) {
        throw DataError("calibrate_noise: report carries no validation residuals");
    }
    NoiseModel noise;
    noise.seed = seed;
    for (int s = 0; s < 4; ++s) {
        noise.lo[static_cast<std::size_t>(s)] = report.percentile(s, low_pct);
        noise.hi[static_cast<std::size_t>(s)] = report.percentile(s, high_pct);
    }
    noise.validate_straddles_zero();
    return noise;
}

}  // namespace landside::sysid
