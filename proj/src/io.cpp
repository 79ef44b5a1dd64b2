#include "fastlsu/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace fastlsu {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::size_t kBlockSize = 1 << 16;
constexpr std::string_view kTsvHeader = "id\tp";

[[noreturn]] void parse_failure(const fs::path& path, Count line, const std::string& why) {
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + why, line);
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

// Calls fn(line_number, id, p) for each data line; line numbers are 1-based
// file lines. Returns the record count.
template <typename Fn>
Count scan_records(const fs::path& path, PValueFormat format, Fn&& fn) {
    auto in = open_input(path);
    std::string line;
    Count line_no = 0;
    Count records = 0;
    if (format == PValueFormat::Tsv) {
        if (!std::getline(in, line)) parse_failure(path, 1, "missing header line 'id\\tp'");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != kTsvHeader) parse_failure(path, 1, "expected header line 'id\\tp'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view id;
        std::string_view text = line;
        if (format == PValueFormat::Tsv) {
            const auto tab = text.find('\t');
            if (tab == std::string_view::npos || text.find('\t', tab + 1) != std::string_view::npos) {
                parse_failure(path, line_no, "expected two tab-separated columns");
            }
            id = text.substr(0, tab);
            text = text.substr(tab + 1);
        }
        const auto p = parse_pvalue(text);
        if (!p) parse_failure(path, line_no, "cannot parse p-value '" + std::string(text) + "'");
        if (!is_valid_pvalue(*p)) {
            parse_failure(path, line_no, "p-value '" + std::string(text) + "' outside [0, 1]");
        }
        fn(line_no, id, *p);
        ++records;
    }
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return records;
}

}  // namespace

PValueFormat parse_format(std::string_view name) {
    if (name == "plain") return PValueFormat::Plain;
    if (name == "tsv") return PValueFormat::Tsv;
    throw ValidationError("unknown p-value format '" + std::string(name) + "'");
}

std::string_view format_name(PValueFormat format) {
    return format == PValueFormat::Plain ? "plain" : "tsv";
}

std::optional<double> parse_pvalue(std::string_view text) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first == last) return std::nullopt;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

std::string format_double(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

FileSource::FileSource(fs::path path, PValueFormat format, std::optional<Count> declared_count)
    : path_(std::move(path)), format_(format) {
    size_ = scan_records(path_, format_, [](Count, std::string_view, double) {});
    if (declared_count && *declared_count != size_) {
        throw ValidationError("'" + path_.string() + "' holds " + std::to_string(size_) +
                              " values but " + std::to_string(*declared_count) +
                              " were declared");
    }
}

void FileSource::for_each_block(const BlockFn& fn) const {
    std::vector<double> block;
    block.reserve(kBlockSize);
    Count first = 0;
    const Count n = scan_records(path_, format_, [&](Count, std::string_view, double p) {
        block.push_back(p);
        if (block.size() == kBlockSize) {
            fn(block, first);
            first += block.size();
            block.clear();
        }
    });
    if (!block.empty()) fn(block, first);
    if (n != size_) throw IoError("'" + path_.string() + "' changed between passes");
}

void FileSource::for_each_record(const RecordFn& fn) const {
    Count index = 0;
    scan_records(path_, format_, [&](Count line_no, std::string_view id, double p) {
        if (format_ == PValueFormat::Plain) {
            const std::string synthesized = std::to_string(line_no);
            fn(index++, synthesized, p);
        } else {
            fn(index++, id, p);
        }
    });
}

std::shared_ptr<FileSource> open_source(const fs::path& path, PValueFormat format,
                                        std::optional<Count> declared_count) {
    if (!fs::exists(path)) throw IoError("no such file '" + path.string() + "'");
    return std::make_shared<FileSource>(path, format, declared_count);
}

Manifest read_manifest(const fs::path& path) {
    auto in = open_input(path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "': " + e.what());
    }
    Manifest manifest;
    const fs::path dir = path.parent_path();
    try {
        manifest.m_global = doc.at("m_global").get<Count>();
        if (doc.contains("default_alpha") && !doc["default_alpha"].is_null()) {
            manifest.default_alpha = doc["default_alpha"].get<double>();
        }
        std::unordered_set<std::string> paths;
        for (const auto& c : doc.at("chunks")) {
            ManifestChunk chunk;
            chunk.chunk_id = c.at("chunk_id").get<std::string>();
            chunk.path = c.at("path").get<std::string>();
            if (chunk.path.is_relative()) chunk.path = dir / chunk.path;
            chunk.format = parse_format(c.value("format", std::string("plain")));
            chunk.m_c = c.at("m_c").get<Count>();
            if (!paths.insert(chunk.path.lexically_normal().string()).second) {
                throw ValidationError("manifest lists '" + chunk.path.string() + "' twice");
            }
            manifest.chunks.push_back(std::move(chunk));
        }
    } catch (const json::exception& e) {
        throw ValidationError("manifest '" + path.string() + "': " + e.what());
    }
    Count total = 0;
    for (const auto& c : manifest.chunks) total += c.m_c;
    if (total != manifest.m_global) {
        throw ValidationError("manifest chunk sizes sum to " + std::to_string(total) +
                              " but m_global = " + std::to_string(manifest.m_global));
    }
    return manifest;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
    json doc;
    doc["m_global"] = manifest.m_global;
    doc["default_alpha"] = manifest.default_alpha ? json(*manifest.default_alpha) : json(nullptr);
    doc["chunks"] = json::array();
    for (const auto& c : manifest.chunks) {
        doc["chunks"].push_back({{"chunk_id", c.chunk_id},
                                 {"path", c.path.generic_string()},
                                 {"format", std::string(format_name(c.format))},
                                 {"m_c", c.m_c}});
    }
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::vector<ChunkDescriptor> open_chunks(const Manifest& manifest) {
    std::vector<ChunkDescriptor> chunks;
    chunks.reserve(manifest.chunks.size());
    for (const auto& c : manifest.chunks) {
        chunks.push_back({c.chunk_id, c.m_c, open_source(c.path, c.format, c.m_c)});
    }
    validate_chunks(chunks, manifest.m_global);
    return chunks;
}

Manifest split_fixed(const fs::path& input, PValueFormat format, Count chunk_size,
                     const fs::path& out_dir) {
    if (chunk_size == 0) throw ValidationError("chunk size must be at least 1");
    const auto source = open_source(input, format);
    const Count m = source->size();
    if (m == 0) throw ValidationError("'" + input.string() + "' holds no p-values");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    const Count n_chunks = (m + chunk_size - 1) / chunk_size;
    const std::string ext = format == PValueFormat::Plain ? ".txt" : ".tsv";
    Manifest manifest;
    manifest.m_global = m;

    auto in = open_input(input);
    std::string line;
    if (format == PValueFormat::Tsv) std::getline(in, line);
    for (Count i = 0; i < n_chunks; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "chunk_%05llu", static_cast<unsigned long long>(i + 1));
        const fs::path rel = std::string(name) + ext;
        const Count size = std::min(chunk_size, m - i * chunk_size);
        auto out = open_output(out_dir / rel);
        if (format == PValueFormat::Tsv) out << kTsvHeader << '\n';
        for (Count j = 0; j < size; ++j) {
            if (!std::getline(in, line)) throw IoError("'" + input.string() + "' changed while splitting");
            out << line << '\n';
        }
        if (!out) throw IoError("write failure on '" + (out_dir / rel).string() + "'");
        manifest.chunks.push_back({name, rel, format, size});
    }
    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

IdLookup resolve_ids(std::span<const ChunkDescriptor> chunks, std::span<const Position> positions) {
    auto ids = std::make_shared<std::unordered_map<Position, std::string>>();
    std::vector<Position> wanted(positions.begin(), positions.end());
    std::sort(wanted.begin(), wanted.end());

    Position base = 0;
    for (const auto& c : chunks) {
        const auto* file = dynamic_cast<const FileSource*>(c.source.get());
        const Position end = base + c.m_c;
        const auto lo = std::lower_bound(wanted.begin(), wanted.end(), base);
        const auto hi = std::lower_bound(wanted.begin(), wanted.end(), end);
        if (file && file->format() == PValueFormat::Tsv && lo != hi) {
            std::unordered_set<Position> local(lo, hi);
            file->for_each_record([&](Count index, std::string_view id, double) {
                if (local.count(base + index)) ids->emplace(base + index, std::string(id));
            });
        }
        base = end;
    }
    return [ids](Position pos) {
        const auto it = ids->find(pos);
        return it != ids->end() ? it->second : std::to_string(pos + 1);
    };
}

std::filesystem::path summary_path(const fs::path& report_path) {
    return fs::path(report_path.string() + ".json");
}

void write_report(const RejectionReport& report, const QValueTable* qtable, const IdLookup& ids,
                  const ReportMeta& meta, const fs::path& out_path) {
    struct Row {
        Position position;
        double p;
        std::optional<double> q;
    };
    std::vector<Row> rows;
    rows.reserve(report.rejected.size());
    if (qtable) {
        if (qtable->entries.size() != report.rejected.size()) {
            throw InternalError("q-value table does not match the rejection set");
        }
        for (const auto& e : qtable->entries) rows.push_back({e.position, e.p, e.q});
    } else {
        for (const auto& r : report.rejected) rows.push_back({r.position, r.p, std::nullopt});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.p < b.p || (a.p == b.p && a.position < b.position);
    });

    {
        auto out = open_output(out_path);
        out << "id\tp\tq\n";
        for (const auto& row : rows) {
            out << ids(row.position) << '\t' << format_double(row.p) << '\t';
            if (row.q) out << format_double(*row.q);
            out << '\n';
        }
        if (!out) throw IoError("write failure on '" + out_path.string() + "'");
    }

    json summary = {{"m", report.m_global},
                    {"alpha", meta.alpha},
                    {"r", report.r},
                    {"threshold", report.threshold},
                    {"passes", report.passes},
                    {"variant", report.variant},
                    {"dependence", meta.dependence},
                    {"chunking", {{"chunks", report.chunks}}}};
    auto out = open_output(summary_path(out_path));
    out << summary.dump(2) << '\n';
    if (!out) throw IoError("write failure on '" + summary_path(out_path).string() + "'");
}

}  // namespace fastlsu
