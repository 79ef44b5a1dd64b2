#pragma once

#include <span>
#include <string>
#include <vector>

#include "fastlsu/chunked.hpp"
#include "fastlsu/types.hpp"

namespace fastlsu {

struct QValueEntry {
    Position position;
    double p;
    double q;
};

// BH-adjusted p-values of a selected set, sorted by p ascending (ties by position).
struct QValueTable {
    std::vector<QValueEntry> entries;
    Count R = 0;
    Count m_global = 0;
};

// q_(R) = p_(R) * m / R, then q_(i) = min(p_(i) * m / i, q_(i+1)) walking down.
// `selected` must be a complete rejection set of a level-alpha run; O(R log R).
QValueTable compute_qvalues(std::span<const Rejection> selected, Count m_global,
                            SignificanceLevel level);

enum class DependenceRegime { Prds, General };

// H_m = sum_{k=1..m} 1/k. Exact summation up to this size, asymptotic beyond.
inline constexpr Count kHarmonicExactLimit = 100'000'000;

double harmonic_exact(Count m);
// ln m + gamma + 1/(2m).
double harmonic_asymptotic(Count m);
double harmonic_number(Count m);

// alpha / H_m: the level that keeps FDR <= alpha under arbitrary dependence.
SignificanceLevel by_corrected_level(Count m_global, SignificanceLevel level);

// Level for a run under the given regime: alpha for PRDS, alpha / H_m otherwise.
SignificanceLevel level_for(DependenceRegime regime, Count m_global, SignificanceLevel level);

// Reruns the R survivors of a level-alpha run as a self-contained batch at
// alpha** = R * alpha* / m, alpha* = alpha / H_m.
RejectionReport by_two_stage(const RejectionReport& selected, Count m_global,
                             SignificanceLevel level);

struct GroupInput {
    std::string group_id;
    std::vector<ChunkDescriptor> chunks;
    Count m_g = 0;
};

struct GroupResult {
    std::string group_id;
    Count m_g = 0;
    RejectionReport step1;
    // Empty (r = 0) for groups without step-1 rejections.
    RejectionReport step2;
    // alpha** used in step 2; 0 when the group was not rerun.
    double second_level = 0.0;
};

struct GroupOutcome {
    std::vector<GroupResult> groups;
    // Number of groups with at least one step-1 rejection.
    std::size_t selected_groups = 0;
};

// Two-step group procedure: FastLSU per group at alpha; with S of G groups
// selected, each selected group's r_g survivors are rerun as a
// self-contained batch at alpha** = S * r_g * alpha / (G * m_g).
GroupOutcome group_two_step(std::span<const GroupInput> groups, SignificanceLevel level,
                            std::size_t threads = default_threads());

}  // namespace fastlsu
