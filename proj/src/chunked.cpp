#include "fastlsu/chunked.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "fastlsu/core_lsu.hpp"

namespace fastlsu {

namespace {

std::vector<Position> chunk_bases(std::span<const ChunkDescriptor> chunks) {
    std::vector<Position> bases(chunks.size());
    Position base = 0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        bases[i] = base;
        base += chunks[i].m_c;
    }
    return bases;
}

void sort_by_position(std::vector<Rejection>& v) {
    std::sort(v.begin(), v.end(),
              [](const Rejection& a, const Rejection& b) { return a.position < b.position; });
}

// Values of one chunk below `cutoff`, checking the realized length against m_c.
std::vector<Survivor> collect_below(const ChunkDescriptor& chunk, Position base, double cutoff) {
    std::vector<Survivor> out;
    Count seen = 0;
    chunk.source->for_each_block([&](std::span<const double> block, Count first) {
        for (std::size_t j = 0; j < block.size(); ++j) {
            if (block[j] < cutoff) out.push_back({base + first + j, block[j]});
        }
        seen += block.size();
    });
    if (seen != chunk.m_c) {
        throw ValidationError("chunk '" + chunk.chunk_id + "' yielded " + std::to_string(seen) +
                              " values but declares m_c = " + std::to_string(chunk.m_c));
    }
    return out;
}

}  // namespace

void WorkingSetMeter::acquire(Count n) {
    const Count now = current_.fetch_add(n) + n;
    if (now > limit_) {
        current_.fetch_sub(n);
        throw InternalError("resident survivors would reach " + std::to_string(now) +
                            ", over the memory budget of " + std::to_string(limit_));
    }
    Count seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
}

void validate_chunks(std::span<const ChunkDescriptor> chunks, Count m_global) {
    if (m_global == 0) throw ValidationError("global problem size m must be positive");
    std::unordered_set<std::string> ids;
    Count total = 0;
    for (const auto& c : chunks) {
        if (!ids.insert(c.chunk_id).second) {
            throw ValidationError("duplicate chunk id '" + c.chunk_id + "'");
        }
        if (!c.source) throw ValidationError("chunk '" + c.chunk_id + "' has no source");
        if (c.source->size() != c.m_c) {
            throw ValidationError("chunk '" + c.chunk_id + "' holds " +
                                  std::to_string(c.source->size()) + " values but declares m_c = " +
                                  std::to_string(c.m_c));
        }
        total += c.m_c;
    }
    if (total != m_global) {
        throw ValidationError("chunk sizes sum to " + std::to_string(total) + " but m = " +
                              std::to_string(m_global));
    }
}

std::vector<ChunkDescriptor> make_chunks(std::span<const double> values,
                                         std::span<const Count> sizes) {
    std::vector<ChunkDescriptor> chunks;
    chunks.reserve(sizes.size());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (offset + sizes[i] > values.size()) {
            throw ValidationError("chunk sizes exceed the number of values");
        }
        std::vector<double> part(values.begin() + offset, values.begin() + offset + sizes[i]);
        chunks.push_back({"chunk" + std::to_string(i + 1), sizes[i],
                          std::make_shared<VectorSource>(std::move(part))});
        offset += sizes[i];
    }
    return chunks;
}

ChunkPassResult chunk_local_pass(const ChunkDescriptor& chunk, Position base, Count global_r,
                                 Count m_global, SignificanceLevel level) {
    if (global_r > m_global) throw ValidationError("survivor total exceeds m");
    ChunkPassResult out;
    out.chunk_id = chunk.chunk_id;
    out.cutoff = step_threshold(global_r, level.value(), m_global);
    out.survivors = collect_below(chunk, base, out.cutoff);
    out.r_c = out.survivors.size();
    out.passes = 1;
    return out;
}

ChunkPassResult refine_pass(const ChunkPassResult& previous, Count global_r, Count m_global,
                            SignificanceLevel level) {
    if (global_r > m_global) throw ValidationError("survivor total exceeds m");
    ChunkPassResult out;
    out.chunk_id = previous.chunk_id;
    out.cutoff = step_threshold(global_r, level.value(), m_global);
    for (const auto& s : previous.survivors) {
        if (s.p < out.cutoff) out.survivors.push_back(s);
    }
    out.r_c = out.survivors.size();
    out.passes = previous.passes + 1;
    return out;
}

ChunkPassResult reduce_chunk(const ChunkDescriptor& chunk, Position base, Count m_global,
                             SignificanceLevel level) {
    if (chunk.m_c > m_global) throw ValidationError("chunk larger than m");
    const FixedPoint fp = iterate_to_fixed_point(
        chunk.m_c, m_global - chunk.m_c, level.value(), m_global,
        [&](double cutoff) { return count_below(*chunk.source, cutoff); });
    ChunkPassResult out;
    out.chunk_id = chunk.chunk_id;
    out.cutoff = fp.cutoff;
    out.survivors = collect_below(chunk, base, fp.cutoff);
    out.r_c = out.survivors.size();
    out.passes = static_cast<std::uint32_t>(fp.scan_counts.size());
    return out;
}

RejectionReport fast_lsu_chunked_sequential(std::span<const ChunkDescriptor> chunks,
                                            Count m_global, SignificanceLevel level) {
    validate_chunks(chunks, m_global);
    const auto bases = chunk_bases(chunks);

    std::vector<ChunkPassResult> passes;
    passes.reserve(chunks.size());
    Count total = 0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        passes.push_back(chunk_local_pass(chunks[i], bases[i], m_global, m_global, level));
        total += passes.back().r_c;
    }

    RejectionReport report;
    report.variant = "chunked-seq";
    report.m_global = m_global;
    report.chunks = chunks.size();
    report.scan_counts.push_back(total);

    Count previous = m_global;
    while (total != previous && total > 0) {
        previous = total;
        Count next = 0;
        for (auto& pass : passes) {
            pass = refine_pass(pass, previous, m_global, level);
            next += pass.r_c;
        }
        if (next > previous) throw InternalError("survivor total increased between passes");
        total = next;
        report.scan_counts.push_back(total);
    }

    report.r = total;
    report.passes = static_cast<std::uint32_t>(report.scan_counts.size());
    report.threshold = step_threshold(total > 0 ? total : 1, level.value(), m_global);
    report.rejected.reserve(total);
    for (const auto& pass : passes) {
        report.rejected.insert(report.rejected.end(), pass.survivors.begin(),
                               pass.survivors.end());
    }
    sort_by_position(report.rejected);
    return report;
}

RejectionReport fast_lsu_chunked_parallel(std::span<const ChunkDescriptor> chunks,
                                          Count m_global, SignificanceLevel level,
                                          MemoryBudget budget, std::size_t threads) {
    validate_chunks(chunks, m_global);
    const auto bases = chunk_bases(chunks);
    const double alpha = level.value();
    const std::size_t n = chunks.size();

    // Independent chunk reductions; counting passes only, nothing retained.
    std::vector<FixedPoint> local(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& c = chunks[i];
        local[i] = iterate_to_fixed_point(c.m_c, m_global - c.m_c, alpha, m_global,
                                          [&](double cutoff) { return count_below(*c.source, cutoff); });
    });

    RejectionReport report;
    report.variant = "chunked-par";
    report.m_global = m_global;
    report.chunks = n;

    std::uint32_t local_passes = 0;
    std::vector<Count> offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        local_passes = std::max<std::uint32_t>(local_passes,
                                               static_cast<std::uint32_t>(local[i].scan_counts.size()));
        offsets[i + 1] = offsets[i] + local[i].r;
    }
    const Count union_size = offsets[n];

    WorkingSetMeter meter(budget.m_star());
    FixedPoint combined;

    if (union_size <= budget.m_star()) {
        // Union fits: materialize it and reduce in memory.
        meter.acquire(union_size);
        std::vector<double> values(union_size);
        std::vector<Position> positions(union_size);
        parallel_for(n, threads, [&](std::size_t i) {
            const auto survivors = collect_below(chunks[i], bases[i], local[i].cutoff);
            if (survivors.size() != local[i].r) {
                throw InternalError("chunk '" + chunks[i].chunk_id +
                                    "' changed between passes");
            }
            for (std::size_t j = 0; j < survivors.size(); ++j) {
                values[offsets[i] + j] = survivors[j].p;
                positions[offsets[i] + j] = survivors[j].position;
            }
        });
        const auto batch = PValueBatch::survivors_of(std::move(values), m_global,
                                                     std::move(positions));
        auto final_report = fast_lsu_iterative(batch, level);
        combined.r = final_report.r;
        combined.cutoff = final_report.threshold;
        combined.scan_counts = final_report.scan_counts;
        report.rejected = std::move(final_report.rejected);
        meter.release(union_size);
    } else {
        // Union exceeds the budget: survivor sets stay on their chunk streams
        // and the shared-cutoff rounds run as counting passes.
        std::vector<Count> partial(n);
        combined = iterate_to_fixed_point(union_size, 0, alpha, m_global, [&](double cutoff) {
            parallel_for(n, threads,
                         [&](std::size_t i) { partial[i] = count_below(*chunks[i].source, cutoff); });
            return std::accumulate(partial.begin(), partial.end(), Count{0});
        });
        std::vector<std::vector<Survivor>> emitted(n);
        if (combined.r > 0) {
            parallel_for(n, threads, [&](std::size_t i) {
                emitted[i] = collect_below(chunks[i], bases[i], combined.cutoff);
            });
        }
        for (auto& e : emitted) report.rejected.insert(report.rejected.end(), e.begin(), e.end());
    }

    if (report.rejected.size() != combined.r) {
        throw InternalError("combined rejection set disagrees with its fixed point");
    }
    report.r = combined.r;
    report.threshold = combined.cutoff;
    report.scan_counts = combined.scan_counts;
    report.passes = local_passes + static_cast<std::uint32_t>(combined.scan_counts.size());
    report.peak_resident = meter.peak();
    sort_by_position(report.rejected);
    return report;
}

RejectionReport union_of_chunks_bh(std::span<const ChunkDescriptor> chunks,
                                   SignificanceLevel level) {
    const Count total = std::accumulate(chunks.begin(), chunks.end(), Count{0},
                                        [](Count s, const ChunkDescriptor& c) { return s + c.m_c; });
    validate_chunks(chunks, total);
    const auto bases = chunk_bases(chunks);

    RejectionReport report;
    report.variant = "union-unsafe";
    report.m_global = total;
    report.chunks = chunks.size();
    report.passes = 1;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (chunks[i].m_c == 0) continue;
        const auto local = bh_oracle(PValueBatch::whole(read_all(*chunks[i].source)), level);
        for (const auto& r : local.rejected) {
            report.rejected.push_back({bases[i] + r.position, r.p});
        }
        if (local.r > 0) report.threshold = std::max(report.threshold, local.threshold);
    }
    report.r = report.rejected.size();
    return report;
}

}  // namespace fastlsu
