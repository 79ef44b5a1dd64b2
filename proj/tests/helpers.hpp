#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fastlsu/sim.hpp"
#include "fastlsu/types.hpp"

namespace fastlsu::test {

// The 15 p-values of the classic BH worked example, in their listed order.
inline const std::vector<double> kWorked = {0.6528, 0.7590, 0.0298, 0.4262, 0.0459,
                                              0.0278, 0.0001, 0.0019, 0.0004, 0.0201,
                                              1.0000, 0.5719, 0.3240, 0.0095, 0.0344};
inline const std::vector<double> kWorkedSelected = {0.0001, 0.0019, 0.0004, 0.0095};
// 0-based positions of the selected values.
inline const std::vector<Position> kWorkedPositions = {6, 7, 8, 13};

inline std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

inline std::vector<double> rejected_values(const RejectionReport& r) {
    std::vector<double> out;
    for (const auto& x : r.rejected) out.push_back(x.p);
    return sorted(out);
}

// Mixed batch: uniform nulls, a random fraction of strong signals, some
// moderate signals, and occasional exact ties.
inline std::vector<double> random_batch(Rng& rng, std::size_t m) {
    const double signal_frac = rng.uniform() * 0.2;
    std::vector<double> v(m);
    for (auto& x : v) {
        const double u = rng.uniform();
        if (u < signal_frac * 0.5) {
            x = rng.uniform() * 1e-4;
        } else if (u < signal_frac) {
            x = rng.uniform() * 0.01;
        } else {
            x = rng.uniform();
        }
    }
    if (m > 4 && rng.uniform() < 0.3) v[m / 2] = v[m / 3];
    return v;
}

// Brute force straight from the definition: the largest i with at least i
// values strictly below i*alpha/m. O(m^2); test-only.
inline Count brute_force_r(const std::vector<double>& v, double alpha) {
    const Count m = v.size();
    for (Count i = m; i >= 1; --i) {
        const double t = step_threshold(i, alpha, m);
        const auto below = static_cast<Count>(std::count_if(v.begin(), v.end(), [t](double p) { return p < t; }));
        if (below >= i) return i;
    }
    return 0;
}

// Full-set BH adjusted p-values in input order: min over j >= rank of
// p_(j) * m / j, from every one of the m values. Test oracle.
inline std::vector<double> full_set_adjusted(const std::vector<double>& v) {
    const std::size_t m = v.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> adj(m);
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t i = m; i >= 1; --i) {
        const auto idx = order[i - 1];
        running = std::min(running, v[idx] * static_cast<double>(m) / static_cast<double>(i));
        adj[idx] = running;
    }
    return adj;
}

// H_15 as an exact rational over lcm(1..15) = 360360.
inline double harmonic15_rational() {
    std::uint64_t num = 0;
    for (std::uint64_t k = 1; k <= 15; ++k) num += 360360 / k;
    return static_cast<double>(num) / 360360.0;
}

// Random composition of m into k parts, possibly with empty parts.
inline std::vector<Count> random_partition(Rng& rng, Count m, std::size_t k) {
    std::vector<Count> cuts{0, m};
    for (std::size_t i = 1; i < k; ++i) cuts.push_back(rng.next() % (m + 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Count> sizes;
    for (std::size_t i = 1; i < cuts.size(); ++i) sizes.push_back(cuts[i] - cuts[i - 1]);
    return sizes;
}

// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("fastlsu_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string plain_lines(const std::vector<double>& v) {
    std::string out;
    for (double x : v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << x;
        out += ss.str() + "\n";
    }
    return out;
}

}  // namespace fastlsu::test
