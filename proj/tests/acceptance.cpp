// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: fastlsu_acceptance [criterion-number ...]   (no arguments runs all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "fastlsu/adjust.hpp"
#include "fastlsu/chunked.hpp"
#include "fastlsu/core_lsu.hpp"
#include "fastlsu/sim.hpp"
#include "helpers.hpp"

using namespace fastlsu;
using namespace fastlsu::test;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& text) {
        if (pass) detail += (detail.empty() ? "" : "; ") + text;
    }
};

struct Criterion {
    std::string name;
    double time_limit;  // seconds
    std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

const std::vector<Count> kTwoChunkSplit = {8, 7};

Outcome worked_example() {
    Outcome o;
    const SignificanceLevel level(0.05);
    const auto want = sorted(kWorkedSelected);
    const auto it = fast_lsu_iterative(PValueBatch::whole(kWorked), level);
    const auto bin = fast_lsu_binned(kWorked, 15, level);
    const auto chunks = make_chunks(kWorked, kTwoChunkSplit);
    const auto seq = fast_lsu_chunked_sequential(chunks, 15, level);
    const auto par = fast_lsu_chunked_parallel(chunks, 15, level, MemoryBudget::unlimited(), 2);
    const auto tight = fast_lsu_chunked_parallel(chunks, 15, level, MemoryBudget(3), 2);
    o.require(rejected_values(it) == want, "iterative set");
    o.require(rejected_values(bin) == want, "binned set");
    o.require(rejected_values(seq) == want, "chunked-seq set");
    o.require(rejected_values(par) == want, "chunked-par set");
    o.require(rejected_values(tight) == want, "chunked-par (budget 3) set");
    // 9, 7, 5, 4 and the confirming scan at the fixed point 4.
    o.require(it.scan_counts == std::vector<Count>{9, 7, 5, 4, 4}, "iterative scan counts");
    o.require(it.r == 4, "fixed point");
    o.note("scans 9,7,5,4 fixed point 4");
    return o;
}

Outcome chunk_intermediates() {
    Outcome o;
    const SignificanceLevel level(0.05);
    const auto chunks = make_chunks(kWorked, kTwoChunkSplit);
    const auto values = [](const ChunkPassResult& r) {
        std::vector<double> v;
        for (const auto& s : r.survivors) v.push_back(s.p);
        return sorted(v);
    };
    const auto c1 = reduce_chunk(chunks[0], 0, 15, level);
    const auto c2 = reduce_chunk(chunks[1], 8, 15, level);
    o.require(values(c1) == sorted({0.0298, 0.0278, 0.0001, 0.0019}), "C1 survivors");
    o.require(values(c2) == sorted({0.0004, 0.0201, 0.0095, 0.0344}), "C2 survivors");
    return o;
}

Outcome oracle_sweep() {
    Outcome o;
    Rng rng(1001);
    Count mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Count m = 1 + rng.next() % 10000;
        const auto v = random_batch(rng, m);
        const SignificanceLevel level(0.01 + 0.29 * rng.uniform());
        const auto oracle = bh_oracle(PValueBatch::whole(v), level);
        const auto chunks = make_chunks(v, random_partition(rng, m, 1 + rng.next() % 20));
        mismatches += fast_lsu_iterative(PValueBatch::whole(v), level).rejected != oracle.rejected;
        mismatches += fast_lsu_binned(v, m, level).rejected != oracle.rejected;
        mismatches += fast_lsu_chunked_sequential(chunks, m, level).rejected != oracle.rejected;
        mismatches += fast_lsu_chunked_parallel(chunks, m, level, MemoryBudget(64)).rejected != oracle.rejected;
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatching runs");
    o.note("1000 batches x 4 variants");
    return o;
}

Outcome partition_sweep() {
    Outcome o;
    Rng rng(2002);
    Count mismatches = 0;
    Count budget_breaches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Count m = 1 + rng.next() % 10000;
        const auto v = random_batch(rng, m);
        const SignificanceLevel level(0.01 + 0.29 * rng.uniform());
        const auto single = fast_lsu_iterative(PValueBatch::whole(v), level);
        const auto chunks = make_chunks(v, random_partition(rng, m, 1 + rng.next() % 20));
        mismatches += fast_lsu_chunked_sequential(chunks, m, level).rejected != single.rejected;
        for (const Count m_star : {Count{64}, Count{1000}, m}) {
            const auto par = fast_lsu_chunked_parallel(chunks, m, level, MemoryBudget(m_star));
            mismatches += par.rejected != single.rejected;
            budget_breaches += par.peak_resident > m_star;
        }
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " mismatching runs");
    o.require(budget_breaches == 0, std::to_string(budget_breaches) + " budget breaches");
    o.note("500 partitions, budgets 64/1000/m");
    return o;
}

ExperimentConfig spiked_recipe(std::vector<Count> ladder) {
    ExperimentConfig c;
    c.m = 30000;
    c.model.pi1 = 0.02;
    c.model.signal = 1e-4;
    c.alpha = 0.1;
    c.replicates = 2000;
    c.seed = 20240601;
    c.ladder = std::move(ladder);
    return c;
}

Outcome fdr_control() {
    Outcome o;
    const auto result = run_inflation_experiment(spiked_recipe({30000}));
    const auto rows = result.summarize();
    const auto& fast = rows.at(1);
    const double bound = 0.1 + 3.0 * fast.se_fdp;
    o.require(fast.mean_fdp <= bound, "mean FDP " + fmt(fast.mean_fdp) + " > " + fmt(bound));
    o.note("mean FDP " + fmt(fast.mean_fdp) + " (SE " + fmt(fast.se_fdp, 2) + ") <= " + fmt(bound));
    return o;
}

Outcome inflation() {
    Outcome o;
    const auto result = run_inflation_experiment(spiked_recipe({30000, 3000, 300}));
    const auto rows = result.summarize();
    double union_fdp = 0.0, fast_fdp = 0.0;
    for (const auto& r : rows) {
        if (r.chunk_size != 300) continue;
        (r.method == kMethodUnion ? union_fdp : fast_fdp) = r.mean_fdp;
    }
    const double rel = fast_fdp > 0.0 ? union_fdp / fast_fdp - 1.0 : 0.0;
    std::size_t non_monotone = 0, fast_varies = 0;
    for (std::size_t k = 0; k < result.replicates.size(); ++k) {
        Count prev = 0;
        for (std::size_t s = 0; s < result.ladder.size(); ++s) {
            const Count r = result.cell(k, s, kMethodUnion).R;
            if (s > 0 && r < prev) {
                ++non_monotone;
                break;
            }
            prev = r;
        }
        for (std::size_t s = 1; s < result.ladder.size(); ++s) {
            if (result.cell(k, s, kMethodFastLsu).R != result.cell(k, 0, kMethodFastLsu).R) {
                ++fast_varies;
                break;
            }
        }
    }
    const std::string fdps = "union FDP " + fmt(union_fdp) + " vs FastLSU " + fmt(fast_fdp) + " at size 300 (+" +
                             fmt(100.0 * rel, 3) + "%)";
    o.require(rel >= 0.25, fdps + ", need >= +25%");
    o.require(non_monotone == 0, "union counts decrease down the ladder in " + std::to_string(non_monotone) + "/" +
                                     std::to_string(result.replicates.size()) + " replicates");
    o.require(fast_varies == 0, "FastLSU count varies in " + std::to_string(fast_varies) + " replicates");
    o.note(fdps);
    return o;
}

Outcome linear_time() {
    Outcome o;
    SignalModel model;
    model.pi1 = 0.01;
    const auto time_binned = [&](Count m) {
        const auto data = simulate(m, model, 7);
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 3; ++rep) {
            const auto start = Clock::now();
            const auto report = fast_lsu_binned(data.pvalues, m, SignificanceLevel(0.05));
            best = std::min(best, seconds_since(start));
            o.require(report.r > 0, "no rejections at m=" + std::to_string(m));
        }
        return best;
    };
    const double t6 = time_binned(1'000'000);
    const double t7 = time_binned(10'000'000);
    const double ratio = t7 / t6;
    o.require(t7 < 10.0, "1e7 took " + fmt(t7) + " s");
    o.require(ratio >= 5.0 && ratio <= 20.0, "ratio " + fmt(ratio) + " outside [5, 20]");
    o.note("t(1e6)=" + fmt(t6) + " s, t(1e7)=" + fmt(t7) + " s, ratio " + fmt(ratio));
    return o;
}

Outcome qvalue_correctness() {
    Outcome o;
    const SignificanceLevel level(0.05);
    const auto report = fast_lsu_iterative(PValueBatch::whole(kWorked), level);
    const auto table = compute_qvalues(report.rejected, 15, level);
    std::vector<double> q;
    for (const auto& e : table.entries) q.push_back(e.q);
    o.require(q == std::vector<double>{0.0001 * 15.0 / 1.0, 0.0004 * 15.0 / 2.0, 0.0019 * 15.0 / 3.0,
                                       0.0095 * 15.0 / 4.0},
              "worked-example q-values");
    const std::vector<double> nominal = {0.0015, 0.0030, 0.0095, 0.035625};
    for (std::size_t i = 0; i < q.size() && i < 4; ++i) {
        o.require(std::abs(q[i] - nominal[i]) <= 1e-15 * nominal[i], "q[" + std::to_string(i) + "] vs decimal");
    }

    Rng rng(3003);
    Count mismatches = 0, checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = random_batch(rng, 1 + rng.next() % 5000);
        const SignificanceLevel a(0.01 + 0.25 * rng.uniform());
        const auto rep = fast_lsu_iterative(PValueBatch::whole(v), a);
        const auto t = compute_qvalues(rep.rejected, v.size(), a);
        const auto full = full_set_adjusted(v);
        for (const auto& e : t.entries) {
            mismatches += e.q != full[e.position];
            ++checked;
        }
    }
    o.require(mismatches == 0, std::to_string(mismatches) + " q-value mismatches");
    o.note(std::to_string(checked) + " survivor q-values match the full-set oracle");
    return o;
}

Outcome by_correction() {
    Outcome o;
    const double h15 = harmonic15_rational();
    const double ratio = by_corrected_level(15, SignificanceLevel(0.05)).value() / 0.05;
    const double rel15 = std::abs(ratio - 1.0 / h15) / (1.0 / h15);
    o.require(rel15 <= 1e-15, "m=15 relative error " + fmt(rel15, 3));

    long double exact = 0.0L;
    for (Count k = 1'000'000; k >= 1; --k) exact += 1.0L / static_cast<long double>(k);
    const double rel6 = std::abs(harmonic_asymptotic(1'000'000) - static_cast<double>(exact)) /
                        static_cast<double>(exact);
    o.require(rel6 <= 1e-12, "m=1e6 relative error " + fmt(rel6, 3));
    o.note("rel err m=15: " + fmt(rel15, 3) + ", m=1e6: " + fmt(rel6, 3));
    return o;
}

Outcome boundary_convention() {
    Outcome o;
    Rng rng(4004);
    Count instances = 0, failures = 0;
    for (const Count m : {Count{1}, Count{2}, Count{7}, Count{15}, Count{100}, Count{1000}}) {
        for (int a = 0; a < 5; ++a) {
            const double alpha = a == 0 ? 0.05 : 0.001 + 0.998 * rng.uniform();
            const SignificanceLevel level(alpha);
            for (Count k = 1; k <= m; k += std::max<Count>(1, m / 50)) {
                // k-1 values far below, one exactly at k*alpha/m, the rest at 1.
                std::vector<double> v(m, 1.0);
                for (Count i = 0; i + 1 < k; ++i) v[i] = step_threshold(1, alpha, m) * 0.5 * rng.uniform();
                v[k - 1] = step_threshold(k, alpha, m);
                std::swap(v[k - 1], v[rng.next() % m]);
                const auto it = fast_lsu_iterative(PValueBatch::whole(v), level);
                const auto bin = fast_lsu_binned(v, m, level);
                failures += it.r != k - 1;
                failures += bin.r != k - 1;
                ++instances;
            }
        }
    }
    o.require(failures == 0, std::to_string(failures) + " boundary values rejected");
    o.note(std::to_string(instances) + " constructed instances, iterative and binned");
    return o;
}

const std::map<int, Criterion>& criteria() {
    static const std::map<int, Criterion> all = {
        {1, {"worked-example fidelity", 1.0, worked_example}},
        {2, {"chunk intermediate fidelity", 1.0, chunk_intermediates}},
        {3, {"oracle equivalence sweep", 60.0, oracle_sweep}},
        {4, {"partition invariance sweep", 60.0, partition_sweep}},
        {5, {"FDR control", 300.0, fdr_control}},
        {6, {"inflation reproduction", 300.0, inflation}},
        {7, {"linear-time behavior", 120.0, linear_time}},
        {8, {"q-value correctness", 60.0, qvalue_correctness}},
        {9, {"dependence correction", 10.0, by_correction}},
        {10, {"boundary convention", 60.0, boundary_convention}},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (!criteria().count(id)) {
            std::cerr << "unknown criterion '" << argv[i] << "'\n";
            return 2;
        }
        selected.push_back(id);
    }
    if (selected.empty()) {
        for (const auto& [id, c] : criteria()) selected.push_back(id);
    }

    int failed = 0;
    for (const int id : selected) {
        const auto& c = criteria().at(id);
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = seconds_since(start);
        o.require(secs < c.time_limit, "took " + fmt(secs) + " s, limit " + fmt(c.time_limit) + " s");
        std::printf("%s  %2d %-30s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, c.name.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
