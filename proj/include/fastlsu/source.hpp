#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fastlsu/types.hpp"

namespace fastlsu {

// A re-readable stream of validated p-values. Each call to for_each_block
// starts a fresh pass from the beginning; blocks arrive in order and
// first_index is the 0-based index of block[0] within the source.
class ChunkSource {
public:
    using BlockFn = std::function<void(std::span<const double> block, Count first_index)>;

    virtual ~ChunkSource() = default;

    virtual Count size() const = 0;
    virtual void for_each_block(const BlockFn& fn) const = 0;
};

class VectorSource final : public ChunkSource {
public:
    explicit VectorSource(std::vector<double> values);

    Count size() const override { return values_.size(); }
    void for_each_block(const BlockFn& fn) const override;

    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

// One linear scan counting values strictly below `cutoff`.
Count count_below(const ChunkSource& source, double cutoff);

// Reads every value into memory (one pass).
std::vector<double> read_all(const ChunkSource& source);

}  // namespace fastlsu
