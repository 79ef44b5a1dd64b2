#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fastlsu/error.hpp"

namespace fastlsu {

using Count = std::uint64_t;
using Position = std::uint64_t;

class SignificanceLevel {
public:
    explicit SignificanceLevel(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ValidationError("significance level must lie in (0, 1), got " +
                                  std::to_string(alpha));
        }
    }

    double value() const noexcept { return alpha_; }

private:
    double alpha_;
};

// The step-up cutoff k * alpha / m. Every variant (oracle, iterative, binned,
// chunked) evaluates cutoffs through this one expression so that the strict
// "p < cutoff" test is bit-identical across them.
inline double step_threshold(Count k, double alpha, Count m) noexcept {
    return static_cast<double>(k) * alpha / static_cast<double>(m);
}

inline bool is_valid_pvalue(double p) noexcept {
    return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

// Throws ValidationError naming `position` when p is outside [0, 1] or non-finite.
void validate_pvalue(double p, Position position);

// How a batch's counts are tiled against the global problem size m.
//   SelfContained: the batch is the whole problem (size == m).
//   Chunk:         an arbitrary subset; cutoffs are shifted by m - size.
//   Survivors:     the union of earlier chunk reductions; cutoffs use r directly.
enum class Tiling { SelfContained, Chunk, Survivors };

// Validated p-values plus the global problem size they are tested against.
// Optional positions map each value back to its index in the full problem;
// when absent the i-th value sits at position i.
class PValueBatch {
public:
    static PValueBatch whole(std::vector<double> values);
    static PValueBatch chunk_of(std::vector<double> values, Count m_global,
                                std::vector<Position> positions = {});
    static PValueBatch survivors_of(std::vector<double> values, Count m_global,
                                    std::vector<Position> positions = {});

    std::span<const double> values() const noexcept { return values_; }
    Count size() const noexcept { return values_.size(); }
    Count m_global() const noexcept { return m_global_; }
    Tiling tiling() const noexcept { return tiling_; }
    bool self_contained() const noexcept { return tiling_ == Tiling::SelfContained; }

    // Shift added to a survivor count before forming the cutoff.
    Count tile_offset() const noexcept {
        return tiling_ == Tiling::Chunk ? m_global_ - values_.size() : 0;
    }

    Position position(std::size_t i) const noexcept {
        return positions_.empty() ? static_cast<Position>(i) : positions_[i];
    }

private:
    PValueBatch(std::vector<double> values, Count m_global, Tiling tiling,
                std::vector<Position> positions);

    std::vector<double> values_;
    Count m_global_;
    Tiling tiling_;
    std::vector<Position> positions_;
};

struct Rejection {
    Position position;
    double p;

    friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct RejectionReport {
    // Sorted by position.
    std::vector<Rejection> rejected;
    Count r = 0;
    // Every rejected p lies strictly below this cutoff; every other p is at or above it.
    double threshold = 0.0;
    std::uint32_t passes = 0;
    Count m_global = 0;
    // Survivor count after each scan (iterative and chunked variants).
    std::vector<Count> scan_counts;
    std::string variant;
    std::size_t chunks = 1;
    // Largest number of survivor values resident at once (chunked-par only).
    Count peak_resident = 0;

    std::vector<Position> rejected_positions() const;
};

}  // namespace fastlsu
