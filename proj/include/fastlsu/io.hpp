#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastlsu/adjust.hpp"
#include "fastlsu/chunked.hpp"
#include "fastlsu/source.hpp"

namespace fastlsu {

// PLAIN: one decimal p-value per line.
// TSV:   header line "id\tp", then "id<TAB>p" rows.
enum class PValueFormat { Plain, Tsv };

PValueFormat parse_format(std::string_view name);
std::string_view format_name(PValueFormat format);

// Parses a decimal (scientific notation accepted) p-value. Returns nullopt on
// malformed text; range is checked separately.
std::optional<double> parse_pvalue(std::string_view text);

// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

// A p-value file read as a re-openable stream. Construction makes one full
// validating pass so parse errors surface early with their line numbers.
class FileSource final : public ChunkSource {
public:
    using RecordFn = std::function<void(Count index, std::string_view id, double p)>;

    FileSource(std::filesystem::path path, PValueFormat format,
               std::optional<Count> declared_count = std::nullopt);

    Count size() const override { return size_; }
    void for_each_block(const BlockFn& fn) const override;

    // Every record in file order. PLAIN ids are 1-based line numbers.
    void for_each_record(const RecordFn& fn) const;

    const std::filesystem::path& path() const noexcept { return path_; }
    PValueFormat format() const noexcept { return format_; }

private:
    std::filesystem::path path_;
    PValueFormat format_;
    Count size_ = 0;
};

std::shared_ptr<FileSource> open_source(const std::filesystem::path& path, PValueFormat format,
                                        std::optional<Count> declared_count = std::nullopt);

struct ManifestChunk {
    std::string chunk_id;
    std::filesystem::path path;
    PValueFormat format = PValueFormat::Plain;
    Count m_c = 0;
};

// JSON: {"m_global": N, "default_alpha": a (optional),
//        "chunks": [{"chunk_id", "path", "format", "m_c"}, ...]}
// Relative chunk paths are resolved against the manifest's directory.
struct Manifest {
    Count m_global = 0;
    std::optional<double> default_alpha;
    std::vector<ManifestChunk> chunks;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Opens every chunk file of a manifest; validates sizes and uniqueness.
std::vector<ChunkDescriptor> open_chunks(const Manifest& manifest);

// Splits a p-value file into ceil(m / chunk_size) files (the last may be
// short) under out_dir, copying lines verbatim, and writes
// out_dir/manifest.json. Returns the manifest with paths relative to out_dir.
Manifest split_fixed(const std::filesystem::path& input, PValueFormat format, Count chunk_size,
                     const std::filesystem::path& out_dir);

// Maps global positions of rejected values back to their id text.
using IdLookup = std::function<std::string(Position)>;

// Ids for positions drawn from file-backed chunks (one extra pass per TSV
// chunk; PLAIN ids are the global 1-based position).
IdLookup resolve_ids(std::span<const ChunkDescriptor> chunks,
                     std::span<const Position> positions);

struct ReportMeta {
    double alpha = 0.05;
    std::string dependence = "prds";
};

// Writes "id\tp\tq" rows sorted by p then position (q empty without a table)
// and a JSON summary sidecar at <out_path>.json. Byte-deterministic.
void write_report(const RejectionReport& report, const QValueTable* qtable,
                  const IdLookup& ids, const ReportMeta& meta,
                  const std::filesystem::path& out_path);

std::filesystem::path summary_path(const std::filesystem::path& report_path);

}  // namespace fastlsu
