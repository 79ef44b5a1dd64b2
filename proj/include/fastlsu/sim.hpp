#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fastlsu/parallel.hpp"
#include "fastlsu/types.hpp"

namespace fastlsu {

// Reproducible generator: std::mt19937_64 (its output sequence is fixed by
// the standard) with doubles formed from the top 53 bits, so draws match
// bit for bit on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Independent stream seed for replicate `index` (splitmix64 finalizer).
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index);

// Uniform(0,1) nulls; each position independently becomes a signal with
// probability pi1. Replace: the signal p-value is `signal`. Scale: it is
// `signal` times the uniform draw.
struct SignalModel {
    enum class Mode { Replace, Scale };

    double pi1 = 0.02;
    double signal = 1e-4;
    Mode mode = Mode::Replace;
};

struct TruthLabels {
    // 1 = genuine signal, 0 = null.
    std::vector<std::uint8_t> is_signal;
    Count m0 = 0;
    Count m1 = 0;

    static TruthLabels from_flags(std::vector<std::uint8_t> flags);
    Count size() const noexcept { return is_signal.size(); }
};

struct SimulatedData {
    std::vector<double> pvalues;
    TruthLabels truth;
};

// Per position: one uniform draw for the null value, then one for the signal flag.
SimulatedData simulate(Count m, const SignalModel& model, std::uint64_t seed);

struct FdpResult {
    Count R = 0;
    Count V = 0;
    // V / R, or 0 when R = 0.
    double fdp = 0.0;
};

FdpResult evaluate_fdp(const RejectionReport& report, const TruthLabels& truth);

inline constexpr std::string_view kMethodUnion = "union-unsafe";
inline constexpr std::string_view kMethodFastLsu = "fastlsu";

struct ExperimentCell {
    Count chunk_size = 0;
    std::string method;
    Count R = 0;
    Count V = 0;
    double fdp = 0.0;
    double max_rejected_p = 0.0;
    double seconds = 0.0;
};

struct ExperimentSummaryRow {
    Count chunk_size = 0;
    std::string method;
    double mean_R = 0.0;
    double mean_V = 0.0;
    double mean_fdp = 0.0;
    double se_fdp = 0.0;
    double mean_max_rejected_p = 0.0;
    double seconds = 0.0;
};

struct ExperimentResult {
    std::vector<Count> ladder;
    // replicates[k] holds, for each ladder size in order, the union cell
    // followed by the fastlsu cell.
    std::vector<std::vector<ExperimentCell>> replicates;

    const ExperimentCell& cell(std::size_t replicate, std::size_t size_index,
                               std::string_view method) const;
    std::vector<ExperimentSummaryRow> summarize() const;
};

struct ExperimentConfig {
    Count m = 30000;
    SignalModel model;
    std::vector<Count> ladder;
    double alpha = 0.1;
    std::size_t replicates = 1;
    std::uint64_t seed = 1;
    std::size_t threads = default_threads();
};

// For each replicate and chunk size: the unsafe union of per-chunk BH versus
// chunked FastLSU, both scored against the truth labels.
ExperimentResult run_inflation_experiment(const ExperimentConfig& config);

// Same comparison on fixed data with known truth (one replicate).
ExperimentResult run_inflation_on(std::span<const double> pvalues, const TruthLabels& truth,
                                  std::span<const Count> ladder, double alpha);

// Header: chunk_size,method,rejections,max_rejected_p,realized_fdp
// Replicate means when there is more than one replicate.
void write_inflation_csv(const ExperimentResult& result, std::ostream& out);

struct BenchRow {
    Count m = 0;
    std::string variant;
    double seconds = 0.0;
    std::uint32_t passes = 0;
    Count r = 0;
    // Empty on success; otherwise why the run could not complete.
    std::string error;
};

// Wall time of binned, iterative and the sort-based oracle at each size, on
// uniform nulls with 1% signals at 1e-4.
std::vector<BenchRow> bench_scaling(std::span<const Count> sizes, double alpha,
                                    std::uint64_t seed);

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out);

}  // namespace fastlsu
