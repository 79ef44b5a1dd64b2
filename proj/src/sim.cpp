#include "fastlsu/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <new>
#include <ostream>

#include "fastlsu/chunked.hpp"
#include "fastlsu/core_lsu.hpp"
#include "fastlsu/io.hpp"

namespace fastlsu {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Count> fixed_sizes(Count m, Count chunk_size) {
    std::vector<Count> sizes;
    for (Count done = 0; done < m; done += chunk_size) sizes.push_back(std::min(chunk_size, m - done));
    return sizes;
}

ExperimentCell score(const RejectionReport& report, const TruthLabels& truth, Count size,
                     std::string_view method, double seconds) {
    const FdpResult fdp = evaluate_fdp(report, truth);
    ExperimentCell cell;
    cell.chunk_size = size;
    cell.method = method;
    cell.R = fdp.R;
    cell.V = fdp.V;
    cell.fdp = fdp.fdp;
    for (const auto& r : report.rejected) cell.max_rejected_p = std::max(cell.max_rejected_p, r.p);
    cell.seconds = seconds;
    return cell;
}

std::vector<ExperimentCell> run_ladder(std::span<const double> pvalues, const TruthLabels& truth,
                                       std::span<const Count> ladder, SignificanceLevel level) {
    std::vector<ExperimentCell> cells;
    cells.reserve(ladder.size() * 2);
    const Count m = pvalues.size();
    for (const Count size : ladder) {
        if (size == 0) throw ValidationError("chunk sizes in the ladder must be positive");
        const auto sizes = fixed_sizes(m, size);
        const auto chunks = make_chunks(pvalues, sizes);

        auto start = Clock::now();
        const auto unsafe = union_of_chunks_bh(chunks, level);
        cells.push_back(score(unsafe, truth, size, kMethodUnion, seconds_since(start)));

        start = Clock::now();
        const auto fast = fast_lsu_chunked_sequential(chunks, m, level);
        cells.push_back(score(fast, truth, size, kMethodFastLsu, seconds_since(start)));
    }
    return cells;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

TruthLabels TruthLabels::from_flags(std::vector<std::uint8_t> flags) {
    TruthLabels t;
    t.is_signal = std::move(flags);
    for (auto f : t.is_signal) {
        if (f > 1) throw ValidationError("truth labels must be 0 or 1");
        (f ? t.m1 : t.m0) += 1;
    }
    return t;
}

SimulatedData simulate(Count m, const SignalModel& model, std::uint64_t seed) {
    if (m == 0) throw ValidationError("simulation size must be positive");
    if (!(model.pi1 >= 0.0 && model.pi1 <= 1.0)) throw ValidationError("pi1 must lie in [0, 1]");
    if (!is_valid_pvalue(model.signal)) throw ValidationError("signal p-value must lie in [0, 1]");

    Rng rng(seed);
    SimulatedData data;
    data.pvalues.resize(m);
    std::vector<std::uint8_t> flags(m);
    for (Count i = 0; i < m; ++i) {
        const double u = rng.uniform();
        const bool signal = rng.uniform() < model.pi1;
        flags[i] = signal ? 1 : 0;
        if (!signal) {
            data.pvalues[i] = u;
        } else {
            data.pvalues[i] = model.mode == SignalModel::Mode::Replace ? model.signal : u * model.signal;
        }
    }
    data.truth = TruthLabels::from_flags(std::move(flags));
    return data;
}

FdpResult evaluate_fdp(const RejectionReport& report, const TruthLabels& truth) {
    FdpResult out;
    for (const auto& r : report.rejected) {
        if (r.position >= truth.size()) {
            throw ValidationError("rejected position " + std::to_string(r.position) +
                                      " lies outside the truth labels",
                                  r.position);
        }
        ++out.R;
        if (!truth.is_signal[r.position]) ++out.V;
    }
    out.fdp = out.R > 0 ? static_cast<double>(out.V) / static_cast<double>(out.R) : 0.0;
    return out;
}

const ExperimentCell& ExperimentResult::cell(std::size_t replicate, std::size_t size_index,
                                             std::string_view method) const {
    return replicates.at(replicate).at(size_index * 2 + (method == kMethodUnion ? 0 : 1));
}

std::vector<ExperimentSummaryRow> ExperimentResult::summarize() const {
    std::vector<ExperimentSummaryRow> rows;
    const double n = static_cast<double>(replicates.size());
    for (std::size_t s = 0; s < ladder.size(); ++s) {
        for (const auto method : {kMethodUnion, kMethodFastLsu}) {
            ExperimentSummaryRow row;
            row.chunk_size = ladder[s];
            row.method = method;
            double sum_sq = 0.0;
            for (std::size_t k = 0; k < replicates.size(); ++k) {
                const auto& c = cell(k, s, method);
                row.mean_R += static_cast<double>(c.R);
                row.mean_V += static_cast<double>(c.V);
                row.mean_fdp += c.fdp;
                sum_sq += c.fdp * c.fdp;
                row.mean_max_rejected_p += c.max_rejected_p;
                row.seconds += c.seconds;
            }
            if (n > 0) {
                row.mean_R /= n;
                row.mean_V /= n;
                row.mean_fdp /= n;
                row.mean_max_rejected_p /= n;
            }
            if (n > 1) {
                const double var = (sum_sq - n * row.mean_fdp * row.mean_fdp) / (n - 1.0);
                row.se_fdp = std::sqrt(std::max(var, 0.0) / n);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

ExperimentResult run_inflation_experiment(const ExperimentConfig& config) {
    if (config.replicates == 0) throw ValidationError("replicates must be at least 1");
    if (config.ladder.empty()) throw ValidationError("chunk-size ladder is empty");
    const SignificanceLevel level(config.alpha);

    ExperimentResult result;
    result.ladder = config.ladder;
    result.replicates.resize(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t k) {
        const auto data = simulate(config.m, config.model, replicate_seed(config.seed, k));
        result.replicates[k] = run_ladder(data.pvalues, data.truth, config.ladder, level);
    });
    return result;
}

ExperimentResult run_inflation_on(std::span<const double> pvalues, const TruthLabels& truth,
                                  std::span<const Count> ladder, double alpha) {
    if (truth.size() != pvalues.size()) {
        throw ValidationError("truth labels and p-values differ in length");
    }
    if (ladder.empty()) throw ValidationError("chunk-size ladder is empty");
    ExperimentResult result;
    result.ladder.assign(ladder.begin(), ladder.end());
    result.replicates.push_back(run_ladder(pvalues, truth, ladder, SignificanceLevel(alpha)));
    return result;
}

void write_inflation_csv(const ExperimentResult& result, std::ostream& out) {
    out << "chunk_size,method,rejections,max_rejected_p,realized_fdp\n";
    const bool single = result.replicates.size() == 1;
    for (const auto& row : result.summarize()) {
        out << row.chunk_size << ',' << row.method << ',';
        if (single) {
            out << static_cast<Count>(row.mean_R);
        } else {
            out << format_double(row.mean_R);
        }
        out << ',' << format_double(row.mean_max_rejected_p) << ','
            << format_double(row.mean_fdp) << '\n';
    }
}

std::vector<BenchRow> bench_scaling(std::span<const Count> sizes, double alpha,
                                    std::uint64_t seed) {
    const SignificanceLevel level(alpha);
    SignalModel model;
    model.pi1 = 0.01;
    std::vector<BenchRow> rows;
    for (const Count m : sizes) {
        try {
            const auto data = simulate(m, model, seed);
            auto time = [&](std::string_view variant, auto&& run) {
                const auto start = Clock::now();
                const RejectionReport report = run();
                rows.push_back({m, std::string(variant), seconds_since(start), report.passes,
                                report.r, {}});
            };
            time("binned", [&] { return fast_lsu_binned(data.pvalues, m, level); });
            time("iterative", [&] {
                return fast_lsu_iterative(PValueBatch::whole(data.pvalues), level);
            });
            time("oracle", [&] { return bh_oracle(PValueBatch::whole(data.pvalues), level); });
        } catch (const std::bad_alloc&) {
            rows.push_back({m, "all", 0.0, 0, 0, "out of memory"});
        }
    }
    return rows;
}

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out) {
    out << "m,variant,seconds,passes,r,error\n";
    for (const auto& row : rows) {
        out << row.m << ',' << row.variant << ',' << format_double(row.seconds) << ','
            << row.passes << ',' << row.r << ',' << row.error << '\n';
    }
}

}  // namespace fastlsu
