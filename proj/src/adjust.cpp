#include "fastlsu/adjust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fastlsu/core_lsu.hpp"

namespace fastlsu {

QValueTable compute_qvalues(std::span<const Rejection> selected, Count m_global,
                            SignificanceLevel level) {
    QValueTable table;
    table.m_global = m_global;
    table.R = selected.size();
    if (selected.empty()) return table;
    if (m_global < selected.size()) throw ValidationError("selected set larger than m");

    table.entries.reserve(selected.size());
    for (const auto& s : selected) {
        if (!(s.p <= level.value())) {
            throw ValidationError("selected p-value at position " + std::to_string(s.position) +
                                      " exceeds alpha; not a rejection set",
                                  s.position);
        }
        table.entries.push_back({s.position, s.p, 0.0});
    }
    std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
        return a.p < b.p || (a.p == b.p && a.position < b.position);
    });

    const double m = static_cast<double>(m_global);
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t i = table.entries.size(); i >= 1; --i) {
        auto& e = table.entries[i - 1];
        running = std::min(running, e.p * m / static_cast<double>(i));
        e.q = running;
    }
    return table;
}

double harmonic_exact(Count m) {
    // Smallest terms first, Kahan-compensated.
    double sum = 0.0;
    double carry = 0.0;
    for (Count k = m; k >= 1; --k) {
        const double y = 1.0 / static_cast<double>(k) - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double harmonic_asymptotic(Count m) {
    const double x = static_cast<double>(m);
    return std::log(x) + std::numbers::egamma + 1.0 / (2.0 * x);
}

double harmonic_number(Count m) {
    if (m == 0) throw ValidationError("harmonic number needs m >= 1");
    return m <= kHarmonicExactLimit ? harmonic_exact(m) : harmonic_asymptotic(m);
}

SignificanceLevel by_corrected_level(Count m_global, SignificanceLevel level) {
    return SignificanceLevel(level.value() / harmonic_number(m_global));
}

SignificanceLevel level_for(DependenceRegime regime, Count m_global, SignificanceLevel level) {
    return regime == DependenceRegime::General ? by_corrected_level(m_global, level) : level;
}

RejectionReport by_two_stage(const RejectionReport& selected, Count m_global,
                             SignificanceLevel level) {
    const Count R = selected.rejected.size();
    if (R == 0) {
        RejectionReport empty;
        empty.variant = "by-two-stage";
        empty.m_global = m_global;
        empty.threshold = 0.0;
        return empty;
    }
    const SignificanceLevel corrected = by_corrected_level(m_global, level);
    const SignificanceLevel second(static_cast<double>(R) * corrected.value() /
                                   static_cast<double>(m_global));

    std::vector<double> values;
    std::vector<Position> positions;
    values.reserve(R);
    positions.reserve(R);
    for (const auto& s : selected.rejected) {
        values.push_back(s.p);
        positions.push_back(s.position);
    }
    auto report = fast_lsu_iterative(
        PValueBatch::survivors_of(std::move(values), R, std::move(positions)), second);
    report.variant = "by-two-stage";
    return report;
}

GroupOutcome group_two_step(std::span<const GroupInput> groups, SignificanceLevel level,
                            std::size_t threads) {
    if (groups.empty()) throw ValidationError("group specification is empty");
    for (const auto& g : groups) {
        if (g.m_g == 0) throw ValidationError("group '" + g.group_id + "' is empty");
    }

    GroupOutcome outcome;
    outcome.groups.resize(groups.size());
    parallel_for(groups.size(), threads, [&](std::size_t i) {
        auto& out = outcome.groups[i];
        out.group_id = groups[i].group_id;
        out.m_g = groups[i].m_g;
        out.step1 = fast_lsu_chunked_sequential(groups[i].chunks, groups[i].m_g, level);
    });

    // Barrier: S is known only once every step-1 run has finished.
    const auto G = static_cast<double>(groups.size());
    for (const auto& g : outcome.groups) {
        if (g.step1.r > 0) ++outcome.selected_groups;
    }
    const auto S = static_cast<double>(outcome.selected_groups);

    for (auto& g : outcome.groups) {
        g.step2.variant = "group-step2";
        g.step2.m_global = g.step1.r;
        if (g.step1.r == 0) continue;
        const auto r_g = static_cast<double>(g.step1.r);
        g.second_level = S * r_g * level.value() / (G * static_cast<double>(g.m_g));

        std::vector<double> values;
        std::vector<Position> positions;
        for (const auto& s : g.step1.rejected) {
            values.push_back(s.p);
            positions.push_back(s.position);
        }
        g.step2 = fast_lsu_iterative(
            PValueBatch::survivors_of(std::move(values), g.step1.r, std::move(positions)),
            SignificanceLevel(g.second_level));
        g.step2.variant = "group-step2";
    }
    return outcome;
}

}  // namespace fastlsu
