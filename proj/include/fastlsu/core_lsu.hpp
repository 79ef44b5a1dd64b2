#pragma once

#include <span>
#include <vector>

#include "fastlsu/source.hpp"
#include "fastlsu/types.hpp"

namespace fastlsu {

// Sort-based linear step-up: r = max{i : p_(i) < i*alpha/m}. Verification
// oracle; requires a self-contained batch.
RejectionReport bh_oracle(const PValueBatch& batch, SignificanceLevel level);

// Result of iterating r_k = #{p < (r_{k-1} + offset) * alpha / m} from r_0 = start.
struct FixedPoint {
    Count r = 0;
    double cutoff = 0.0;
    std::vector<Count> scan_counts;
};

// Drives the counting recursion with any "count values below t" callable.
// Each call to count_below is one linear pass. Throws InternalError if a
// pass ever increases the count.
template <typename CountBelow>
FixedPoint iterate_to_fixed_point(Count start, Count offset, double alpha, Count m,
                                  CountBelow&& count_below) {
    FixedPoint fp;
    Count prev = start;
    // r = 0 is its own fixed point; nothing lies below a zero cutoff.
    while (prev > 0) {
        const Count r = count_below(step_threshold(prev + offset, alpha, m));
        fp.scan_counts.push_back(r);
        if (r > prev) {
            throw InternalError("survivor count increased between passes");
        }
        if (r == prev) break;
        prev = r;
    }
    fp.r = prev;
    fp.cutoff = step_threshold(prev + offset > 0 ? prev + offset : 1, alpha, m);
    return fp;
}

// Repeated linear scans until the survivor count is a fixed point. Handles
// all three tilings: for a chunk the cutoffs are shifted by m - size, for a
// survivor set the first cutoff is size * alpha / m.
RejectionReport fast_lsu_iterative(const PValueBatch& batch, SignificanceLevel level);

// Counts per bin of width alpha/m over [0, alpha). counts[k - 1] holds bin k.
struct BinHistogram {
    std::vector<Count> counts;
    Count sig_total = 0;

    Count bin(Count k) const { return counts.at(k - 1); }
};

// Bin label of p: the k with (k-1)*alpha/m <= p < k*alpha/m, starting from
// ceil(m*p/alpha) bumped by one on an exact quotient. Values at or above
// alpha get m + 1.
Count bin_label(double p, double alpha, Count m);

BinHistogram build_histogram(std::span<const double> values, double alpha, Count m);

// Largest i with (sig_total - count in bins above i) == i, or 0.
Count significant_bin(const BinHistogram& hist);

// Three passes: label, reverse accumulate, return. O(m) time and space.
// Throws ValidationError when the stream length differs from m_global.
RejectionReport fast_lsu_binned(const ChunkSource& stream, Count m_global,
                                SignificanceLevel level);
RejectionReport fast_lsu_binned(std::span<const double> values, Count m_global,
                                SignificanceLevel level);

}  // namespace fastlsu
