#include "fastlsu/core_lsu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fastlsu {

namespace {

void sort_by_position(std::vector<Rejection>& rejected) {
    std::sort(rejected.begin(), rejected.end(),
              [](const Rejection& a, const Rejection& b) { return a.position < b.position; });
}

}  // namespace

RejectionReport bh_oracle(const PValueBatch& batch, SignificanceLevel level) {
    if (!batch.self_contained()) {
        throw ValidationError("bh_oracle requires a self-contained batch");
    }
    const Count m = batch.m_global();
    const double alpha = level.value();
    const auto values = batch.values();

    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    Count r = 0;
    for (Count i = m; i >= 1; --i) {
        if (values[order[i - 1]] < step_threshold(i, alpha, m)) {
            r = i;
            break;
        }
    }

    RejectionReport report;
    report.variant = "oracle";
    report.m_global = m;
    report.r = r;
    report.passes = 1;
    report.threshold = step_threshold(r > 0 ? r : 1, alpha, m);
    report.rejected.reserve(r);
    for (Count i = 0; i < r; ++i) {
        report.rejected.push_back({batch.position(order[i]), values[order[i]]});
    }
    sort_by_position(report.rejected);
    return report;
}

RejectionReport fast_lsu_iterative(const PValueBatch& batch, SignificanceLevel level) {
    const auto values = batch.values();
    const FixedPoint fp = iterate_to_fixed_point(
        batch.size(), batch.tile_offset(), level.value(), batch.m_global(), [&](double cutoff) {
            return static_cast<Count>(std::count_if(values.begin(), values.end(),
                                                    [cutoff](double p) { return p < cutoff; }));
        });

    RejectionReport report;
    report.variant = "iterative";
    report.m_global = batch.m_global();
    report.r = fp.r;
    report.threshold = fp.cutoff;
    report.scan_counts = fp.scan_counts;
    report.passes = static_cast<std::uint32_t>(fp.scan_counts.size());
    if (fp.r > 0) {
        report.rejected.reserve(fp.r);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] < fp.cutoff) report.rejected.push_back({batch.position(i), values[i]});
        }
        sort_by_position(report.rejected);
    }
    return report;
}

Count bin_label(double p, double alpha, Count m) {
    const Count filtered = m + 1;
    const double quotient = static_cast<double>(m) * p / alpha;
    if (!(quotient < static_cast<double>(m) + 2.0)) return filtered;

    const double ceiling = std::ceil(quotient);
    Count k = static_cast<Count>(ceiling);
    if (ceiling == quotient) ++k;
    k = std::clamp<Count>(k, 1, filtered);

    // The quotient can land one bin off when m*p/alpha rounds differently
    // from k*alpha/m; settle on the cutoffs themselves.
    while (k > 1 && p < step_threshold(k - 1, alpha, m)) --k;
    while (k <= m && !(p < step_threshold(k, alpha, m))) ++k;
    return k;
}

BinHistogram build_histogram(std::span<const double> values, double alpha, Count m) {
    BinHistogram hist;
    hist.counts.assign(m, 0);
    for (double p : values) {
        const Count k = bin_label(p, alpha, m);
        if (k <= m) {
            ++hist.counts[k - 1];
            ++hist.sig_total;
        }
    }
    return hist;
}

Count significant_bin(const BinHistogram& hist) {
    Count above = 0;
    for (Count i = hist.counts.size(); i >= 1; --i) {
        if (hist.sig_total - above == i) return i;
        above += hist.counts[i - 1];
    }
    return 0;
}

RejectionReport fast_lsu_binned(const ChunkSource& stream, Count m_global,
                                SignificanceLevel level) {
    if (m_global == 0) throw ValidationError("global problem size m must be positive");
    if (m_global >= std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("binned variant supports m < 2^32 - 1; use the iterative variant");
    }
    const double alpha = level.value();
    const Count m = m_global;

    // Bin: one pass over the stream, storing labels and bin counts.
    std::vector<std::uint32_t> labels;
    labels.reserve(m);
    std::vector<double> values;
    values.reserve(m);
    BinHistogram hist;
    hist.counts.assign(m, 0);
    Count seen = 0;
    stream.for_each_block([&](std::span<const double> block, Count) {
        for (double p : block) {
            validate_pvalue(p, seen);
            if (++seen > m) {
                throw ValidationError("stream holds more than m = " + std::to_string(m) +
                                      " values");
            }
            const Count k = bin_label(p, alpha, m);
            labels.push_back(static_cast<std::uint32_t>(k));
            values.push_back(p);
            if (k <= m) {
                ++hist.counts[k - 1];
                ++hist.sig_total;
            }
        }
    });
    if (seen != m) {
        throw ValidationError("stream holds " + std::to_string(seen) + " values but m = " +
                              std::to_string(m));
    }

    // Accumulate: one reverse pass over the bins.
    const Count r_star = significant_bin(hist);

    // Return: one pass over the labels.
    RejectionReport report;
    report.variant = "binned";
    report.m_global = m;
    report.r = r_star;
    report.passes = 3;
    report.threshold = step_threshold(r_star > 0 ? r_star : 1, alpha, m);
    report.rejected.reserve(r_star);
    for (Count i = 0; i < m; ++i) {
        if (labels[i] <= r_star) report.rejected.push_back({i, values[i]});
    }
    if (report.rejected.size() != r_star) {
        throw InternalError("binned return pass disagrees with the significant bin");
    }
    return report;
}

RejectionReport fast_lsu_binned(std::span<const double> values, Count m_global,
                                SignificanceLevel level) {
    // Wraps the span without copying.
    class SpanSource final : public ChunkSource {
    public:
        explicit SpanSource(std::span<const double> v) : v_(v) {}
        Count size() const override { return v_.size(); }
        void for_each_block(const BlockFn& fn) const override {
            if (!v_.empty()) fn(v_, 0);
        }

    private:
        std::span<const double> v_;
    };
    return fast_lsu_binned(SpanSource(values), m_global, level);
}

}  // namespace fastlsu
