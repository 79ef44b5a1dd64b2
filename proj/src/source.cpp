#include "fastlsu/source.hpp"

#include <algorithm>
#include <string>

namespace fastlsu {

void validate_pvalue(double p, Position position) {
    if (!is_valid_pvalue(p)) {
        throw ValidationError("p-value at position " + std::to_string(position) +
                                  " is outside [0, 1] or not finite",
                              position);
    }
}

PValueBatch::PValueBatch(std::vector<double> values, Count m_global, Tiling tiling,
                         std::vector<Position> positions)
    : values_(std::move(values)),
      m_global_(m_global),
      tiling_(tiling),
      positions_(std::move(positions)) {
    if (m_global_ == 0) {
        throw ValidationError("global problem size m must be positive");
    }
    if (m_global_ < values_.size()) {
        throw ValidationError("batch holds " + std::to_string(values_.size()) +
                              " values but m = " + std::to_string(m_global_));
    }
    if (!positions_.empty() && positions_.size() != values_.size()) {
        throw ValidationError("positions and values differ in length");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        validate_pvalue(values_[i], position(i));
    }
}

PValueBatch PValueBatch::whole(std::vector<double> values) {
    const Count m = values.size();
    return PValueBatch(std::move(values), m, Tiling::SelfContained, {});
}

PValueBatch PValueBatch::chunk_of(std::vector<double> values, Count m_global,
                                  std::vector<Position> positions) {
    const Tiling t = values.size() == m_global ? Tiling::SelfContained : Tiling::Chunk;
    return PValueBatch(std::move(values), m_global, t, std::move(positions));
}

PValueBatch PValueBatch::survivors_of(std::vector<double> values, Count m_global,
                                      std::vector<Position> positions) {
    const Tiling t = values.size() == m_global ? Tiling::SelfContained : Tiling::Survivors;
    return PValueBatch(std::move(values), m_global, t, std::move(positions));
}

std::vector<Position> RejectionReport::rejected_positions() const {
    std::vector<Position> out;
    out.reserve(rejected.size());
    for (const auto& r : rejected) out.push_back(r.position);
    return out;
}

VectorSource::VectorSource(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) validate_pvalue(values_[i], i);
}

void VectorSource::for_each_block(const BlockFn& fn) const {
    if (!values_.empty()) fn(values_, 0);
}

Count count_below(const ChunkSource& source, double cutoff) {
    Count n = 0;
    source.for_each_block([&](std::span<const double> block, Count) {
        n += static_cast<Count>(
            std::count_if(block.begin(), block.end(), [cutoff](double p) { return p < cutoff; }));
    });
    return n;
}

std::vector<double> read_all(const ChunkSource& source) {
    std::vector<double> out;
    out.reserve(source.size());
    source.for_each_block([&](std::span<const double> block, Count) {
        out.insert(out.end(), block.begin(), block.end());
    });
    return out;
}

}  // namespace fastlsu
