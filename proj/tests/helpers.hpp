#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "landside/model.hpp"
#include "landside/rng.hpp"
#include "landside/types.hpp"

namespace testutil {

/// Unique scratch directory under the system temp dir; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("landside_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random stable dynamics for solver tests: diagonal-dominant A with spectral
/// radius below sigma, moderate B entries.
inline landside::DynamicsModel random_stable_model(landside::Rng& rng, double sigma = 0.7) {
    landside::DynamicsModel m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m.a(r, c) = r == c ? rng.uniform(0.3, sigma) : rng.uniform(-0.05, 0.05);
            m.b(r, c) = rng.uniform(-2.0, 2.0);
        }
    }
    return m;
}

/// Independent least-squares oracle: solves Y X'^T (X' X'^T)^{-1} by Gaussian
/// elimination with partial pivoting. Shares no code with the ADMM path.
inline landside::Mat48 normal_equations_oracle(const std::vector<landside::Vec8>& x_prime,
                                               const std::vector<landside::Vec4>& y) {
    double g[8][8] = {};
    double h[4][8] = {};
    for (std::size_t k = 0; k < x_prime.size(); ++k) {
        const auto& x = x_prime[k];
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) {
                g[i][j] += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
            }
        }
        for (int r = 0; r < 4; ++r) {
            for (int j = 0; j < 8; ++j) {
                h[r][j] += y[k][static_cast<std::size_t>(r)] * x[static_cast<std::size_t>(j)];
            }
        }
    }
    landside::Mat48 w;
    for (int r = 0; r < 4; ++r) {
        double m[8][9];
        for (int i = 0; i < 8; ++i) {
            for (int j = 0; j < 8; ++j) m[i][j] = g[i][j];
            m[i][8] = h[r][i];
        }
        for (int c = 0; c < 8; ++c) {
            int p = c;
            for (int i = c + 1; i < 8; ++i) {
                if (std::abs(m[i][c]) > std::abs(m[p][c])) p = i;
            }
            for (int j = 0; j < 9; ++j) std::swap(m[c][j], m[p][j]);
            for (int i = 0; i < 8; ++i) {
                if (i == c || m[i][c] == 0.0) continue;
                double f = m[i][c] / m[c][c];
                for (int j = c; j < 9; ++j) m[i][j] -= f * m[c][j];
            }
        }
        for (int c = 0; c < 8; ++c) w(r, c) = m[c][8] / m[c][c];
    }
    return w;
}

}  // namespace testutil
