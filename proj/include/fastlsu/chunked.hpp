#pragma once

#include <atomic>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fastlsu/parallel.hpp"
#include "fastlsu/source.hpp"
#include "fastlsu/types.hpp"

namespace fastlsu {

struct ChunkDescriptor {
    std::string chunk_id;
    Count m_c = 0;
    std::shared_ptr<const ChunkSource> source;
};

using Survivor = Rejection;

struct ChunkPassResult {
    std::string chunk_id;
    Count r_c = 0;
    // Cutoff applied in this pass; every survivor lies strictly below it.
    double cutoff = 0.0;
    // Ordered by position. Non-survivors are dropped, not flagged.
    std::vector<Survivor> survivors;
    std::uint32_t passes = 0;
};

class MemoryBudget {
public:
    explicit MemoryBudget(Count m_star) : m_star_(m_star) {
        if (m_star == 0) throw ValidationError("memory budget must be at least 1");
    }
    static MemoryBudget unlimited() { return MemoryBudget(~Count{0}); }

    Count m_star() const noexcept { return m_star_; }

private:
    Count m_star_;
};

// Tracks survivor values resident in memory against a budget. acquire()
// throws InternalError instead of exceeding the limit.
class WorkingSetMeter {
public:
    explicit WorkingSetMeter(Count limit) : limit_(limit) {}

    void acquire(Count n);
    void release(Count n) noexcept { current_.fetch_sub(n); }
    Count peak() const noexcept { return peak_.load(); }
    Count current() const noexcept { return current_.load(); }

private:
    Count limit_;
    std::atomic<Count> current_{0};
    std::atomic<Count> peak_{0};
};

// Throws ValidationError unless chunk ids are unique, every source holds
// exactly m_c values, and the sizes sum to m_global.
void validate_chunks(std::span<const ChunkDescriptor> chunks, Count m_global);

// Splits an in-memory batch into consecutive chunks of the given sizes.
std::vector<ChunkDescriptor> make_chunks(std::span<const double> values,
                                         std::span<const Count> sizes);

// One scan of a chunk keeping values below global_r * alpha / m. `base` is the
// global position of the chunk's first value. Use global_r = m for the first pass.
ChunkPassResult chunk_local_pass(const ChunkDescriptor& chunk, Position base, Count global_r,
                                 Count m_global, SignificanceLevel level);

// Same scan over the survivors of an earlier pass.
ChunkPassResult refine_pass(const ChunkPassResult& previous, Count global_r, Count m_global,
                            SignificanceLevel level);

// Reduces one chunk on its own, tiled against m: the fixed point of
// r = #{p < (r + m - m_c) * alpha / m} within the chunk. Survivors materialized.
ChunkPassResult reduce_chunk(const ChunkDescriptor& chunk, Position base, Count m_global,
                             SignificanceLevel level);

// All chunks rescanned each round with one shared cutoff (sum of r_c) * alpha / m
// until the global total stops changing.
RejectionReport fast_lsu_chunked_sequential(std::span<const ChunkDescriptor> chunks,
                                            Count m_global, SignificanceLevel level);

// Each chunk reduced independently (concurrently), then the survivor sets
// combined. If the union fits in the budget it is materialized and reduced in
// memory; otherwise the shared-cutoff rounds continue over the chunk streams,
// starting from m' * alpha / m with m' the union size.
RejectionReport fast_lsu_chunked_parallel(std::span<const ChunkDescriptor> chunks,
                                          Count m_global, SignificanceLevel level,
                                          MemoryBudget budget,
                                          std::size_t threads = default_threads());

// UNSAFE: per-chunk BH at m = m_c, results unioned. Does not control the
// global FDR; kept only to demonstrate the inflation it causes.
RejectionReport union_of_chunks_bh(std::span<const ChunkDescriptor> chunks,
                                   SignificanceLevel level);

}  // namespace fastlsu
