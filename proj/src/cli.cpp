#include "fastlsu/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fastlsu/adjust.hpp"
#include "fastlsu/chunked.hpp"
#include "fastlsu/core_lsu.hpp"
#include "fastlsu/io.hpp"
#include "fastlsu/sim.hpp"

namespace fastlsu::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kDefaultAlpha = 0.05;

struct InputOptions {
    std::vector<std::string> files;
    std::string manifest;
    std::string format = "plain";
    std::optional<Count> m_override;
};

struct RejectOptions {
    InputOptions input;
    std::optional<double> alpha;
    std::string dependence = "prds";
    std::string variant;
    std::optional<Count> memory_budget;
    std::size_t threads = default_threads();
    std::string output;
};

struct LoadedInput {
    std::vector<ChunkDescriptor> chunks;
    Count m_global = 0;
    std::optional<double> manifest_alpha;
    bool from_manifest = false;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("files", in.files, "p-value files (several files are treated as chunks)");
    cmd->add_option("--manifest", in.manifest, "chunk manifest (JSON)");
    cmd->add_option("--format", in.format, "input format for positional files")
        ->check(CLI::IsMember({"plain", "tsv"}));
    cmd->add_option("--m", in.m_override,
                    "global problem size when a single file is one chunk of a larger problem");
}

LoadedInput load_input(const InputOptions& in) {
    const bool have_files = !in.files.empty();
    const bool have_manifest = !in.manifest.empty();
    if (have_files == have_manifest) {
        throw ValidationError("give either p-value files or --manifest, not both or neither");
    }
    LoadedInput loaded;
    if (have_manifest) {
        const auto manifest = read_manifest(in.manifest);
        loaded.chunks = open_chunks(manifest);
        loaded.m_global = manifest.m_global;
        loaded.manifest_alpha = manifest.default_alpha;
        loaded.from_manifest = true;
    } else {
        const auto format = parse_format(in.format);
        for (std::size_t i = 0; i < in.files.size(); ++i) {
            auto src = open_source(in.files[i], format);
            const Count n = src->size();
            loaded.chunks.push_back({"file" + std::to_string(i + 1), n, std::move(src)});
            loaded.m_global += n;
        }
    }
    if (in.m_override) {
        if (*in.m_override < loaded.m_global) {
            throw ValidationError("--m is smaller than the number of p-values read");
        }
        if (*in.m_override != loaded.m_global && loaded.chunks.size() != 1) {
            throw ValidationError("--m above the input size needs exactly one input file");
        }
        loaded.m_global = *in.m_override;
    }
    if (loaded.m_global == 0) throw ValidationError("input holds no p-values");
    return loaded;
}

Count input_count(const LoadedInput& in) {
    Count n = 0;
    for (const auto& c : in.chunks) n += c.m_c;
    return n;
}

std::vector<double> load_values(const LoadedInput& in) {
    std::vector<double> values;
    values.reserve(input_count(in));
    for (const auto& c : in.chunks) {
        const auto part = read_all(*c.source);
        values.insert(values.end(), part.begin(), part.end());
    }
    return values;
}

RejectionReport run_variant(const std::string& variant, const LoadedInput& in,
                            SignificanceLevel level, const RejectOptions& opts) {
    const bool partial = input_count(in) != in.m_global;
    if (partial && variant != "iterative") {
        throw ValidationError("--m above the input size is only supported by --variant iterative");
    }
    if (variant == "iterative") {
        return fast_lsu_iterative(PValueBatch::chunk_of(load_values(in), in.m_global), level);
    }
    if (variant == "binned") {
        return fast_lsu_binned(load_values(in), in.m_global, level);
    }
    if (variant == "oracle") {
        return bh_oracle(PValueBatch::whole(load_values(in)), level);
    }
    if (variant == "chunked-seq") {
        return fast_lsu_chunked_sequential(in.chunks, in.m_global, level);
    }
    if (variant == "chunked-par") {
        const auto budget =
            opts.memory_budget ? MemoryBudget(*opts.memory_budget) : MemoryBudget::unlimited();
        return fast_lsu_chunked_parallel(in.chunks, in.m_global, level, budget, opts.threads);
    }
    throw ValidationError("unknown variant '" + variant + "'");
}

std::string summary_line(const RejectionReport& report, double alpha) {
    std::ostringstream s;
    s << "m=" << report.m_global << " alpha=" << format_double(alpha) << " r=" << report.r
      << " threshold=" << format_double(report.threshold) << " passes=" << report.passes;
    return s.str();
}

int do_reject(const RejectOptions& opts, bool with_qvalues, std::ostream& out) {
    const auto in = load_input(opts.input);
    const SignificanceLevel nominal(opts.alpha.value_or(in.manifest_alpha.value_or(kDefaultAlpha)));
    const auto regime =
        opts.dependence == "general" ? DependenceRegime::General : DependenceRegime::Prds;
    const SignificanceLevel level = level_for(regime, in.m_global, nominal);

    std::string variant = opts.variant;
    if (variant.empty()) variant = in.chunks.size() > 1 ? "chunked-par" : "iterative";

    auto report = run_variant(variant, in, level, opts);
    report.chunks = in.chunks.size();

    std::optional<QValueTable> qtable;
    if (with_qvalues) qtable = compute_qvalues(report.rejected, in.m_global, level);

    if (!opts.output.empty()) {
        const auto positions = report.rejected_positions();
        const auto ids = resolve_ids(in.chunks, positions);
        write_report(report, qtable ? &*qtable : nullptr, ids,
                     ReportMeta{level.value(), opts.dependence}, opts.output);
    }
    out << summary_line(report, level.value()) << '\n';
    return kOk;
}

int do_validate(const InputOptions& input, std::optional<double> alpha_opt, std::size_t threads,
                std::ostream& out) {
    const auto in = load_input(input);
    if (input_count(in) != in.m_global) throw ValidationError("validate needs the whole problem");
    const SignificanceLevel level(alpha_opt.value_or(in.manifest_alpha.value_or(kDefaultAlpha)));
    RejectOptions opts;
    opts.threads = threads;
    const auto oracle = run_variant("oracle", in, level, opts);
    bool agree = true;
    for (const std::string v : {"iterative", "binned", "chunked-seq", "chunked-par"}) {
        const auto report = run_variant(v, in, level, opts);
        const bool same = report.rejected == oracle.rejected;
        agree = agree && same;
        out << v << ": r=" << report.r << (same ? " agrees" : " DISAGREES") << " with oracle r="
            << oracle.r << '\n';
    }
    return agree ? kOk : kInternal;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, std::ostream& err) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) | rd();
    err << "seed=" << s << '\n';
    return s;
}

SignalModel::Mode parse_mode(const std::string& s) {
    return s == "scale" ? SignalModel::Mode::Scale : SignalModel::Mode::Replace;
}

void write_lines(const fs::path& path, const auto& values, auto&& format) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& v : values) f << format(v) << '\n';
    if (!f) throw IoError("write failure on '" + path.string() + "'");
}

TruthLabels read_truth(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> flags;
    std::string line;
    Count line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line != "0" && line != "1") {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                  ": truth label must be 0 or 1", line_no);
        }
        flags.push_back(line == "1" ? 1 : 0);
    }
    return TruthLabels::from_flags(std::move(flags));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"FastLSU: sorting-free Benjamini-Hochberg FDR control for huge p-value sets",
                 "fastlsu"};
    app.require_subcommand(1);

    RejectOptions reject_opts;
    RejectOptions qvalue_opts;
    auto setup_reject = [](CLI::App* cmd, RejectOptions& o) {
        add_input_options(cmd, o.input);
        cmd->add_option("--alpha", o.alpha, "FDR level (default 0.05)");
        cmd->add_option("--dependence", o.dependence, "prds or general (alpha / H_m)")
            ->check(CLI::IsMember({"prds", "general"}));
        cmd->add_option("--variant", o.variant,
                        "iterative, binned, chunked-seq, chunked-par or oracle")
            ->check(CLI::IsMember({"iterative", "binned", "chunked-seq", "chunked-par", "oracle"}));
        cmd->add_option("--memory-budget", o.memory_budget,
                        "max survivors held in memory (chunked-par)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("-o,--output", o.output, "report file (summary JSON at <file>.json)");
    };
    auto* reject = app.add_subcommand("reject", "select significant p-values");
    setup_reject(reject, reject_opts);
    auto* qvalues = app.add_subcommand("qvalues", "select and report BH q-values");
    setup_reject(qvalues, qvalue_opts);

    InputOptions validate_in;
    std::optional<double> validate_alpha;
    std::size_t validate_threads = default_threads();
    auto* validate = app.add_subcommand("validate", "check every variant against the sort-based oracle");
    add_input_options(validate, validate_in);
    validate->add_option("--alpha", validate_alpha, "FDR level (default 0.05)");
    validate->add_option("--threads", validate_threads, "worker threads")->check(CLI::PositiveNumber);

    std::string split_input;
    std::string split_format = "plain";
    Count split_size = 0;
    std::string split_dir;
    auto* split = app.add_subcommand("split", "split a p-value file into fixed-size chunks");
    split->add_option("input", split_input, "p-value file")->required();
    split->add_option("--chunk-size", split_size, "values per chunk")->required()->check(CLI::PositiveNumber);
    split->add_option("--format", split_format)->check(CLI::IsMember({"plain", "tsv"}));
    split->add_option("--out-dir", split_dir, "directory for chunks and manifest.json")->required();

    Count sim_m = 30000;
    SignalModel sim_model;
    std::string sim_mode = "replace";
    std::optional<std::uint64_t> sim_seed;
    std::string sim_out;
    auto* simulate_cmd = app.add_subcommand("simulate", "write synthetic p-values and truth labels");
    simulate_cmd->add_option("--m", sim_m, "number of p-values")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--pi1", sim_model.pi1, "signal probability")->check(CLI::Range(0.0, 1.0));
    simulate_cmd->add_option("--signal", sim_model.signal, "signal p-value")->check(CLI::Range(0.0, 1.0));
    simulate_cmd->add_option("--signal-mode", sim_mode, "replace or scale")
        ->check(CLI::IsMember({"replace", "scale"}));
    simulate_cmd->add_option("--seed", sim_seed, "generator seed");
    simulate_cmd->add_option("-o,--output", sim_out, "p-value file (truth at <file>.truth)")->required();

    ExperimentConfig demo;
    demo.ladder = {30000, 3000, 300};
    demo.alpha = kDefaultAlpha;
    std::string demo_mode = "replace";
    std::optional<std::uint64_t> demo_seed;
    std::string demo_input;
    std::string demo_truth;
    std::string demo_out;
    auto* demo_cmd = app.add_subcommand(
        "demo-inflation",
        "compare UNSAFE per-chunk BH unions with FastLSU across chunk sizes (CSV)");
    demo_cmd->add_option("--sizes", demo.ladder, "chunk-size ladder")->delimiter(',');
    demo_cmd->add_option("--alpha", demo.alpha, "FDR level (default 0.05)");
    demo_cmd->add_option("--replicates", demo.replicates)->check(CLI::PositiveNumber);
    demo_cmd->add_option("--m", demo.m)->check(CLI::PositiveNumber);
    demo_cmd->add_option("--pi1", demo.model.pi1)->check(CLI::Range(0.0, 1.0));
    demo_cmd->add_option("--signal", demo.model.signal)->check(CLI::Range(0.0, 1.0));
    demo_cmd->add_option("--signal-mode", demo_mode)->check(CLI::IsMember({"replace", "scale"}));
    demo_cmd->add_option("--seed", demo_seed);
    demo_cmd->add_option("--threads", demo.threads)->check(CLI::PositiveNumber);
    demo_cmd->add_option("--input", demo_input, "PLAIN p-value file instead of synthetic data");
    demo_cmd->add_option("--truth", demo_truth, "0/1 truth labels aligned with --input");
    demo_cmd->add_option("-o,--output", demo_out, "CSV path (default stdout)");

    std::vector<Count> bench_sizes = {100000, 1000000, 10000000};
    double bench_alpha = kDefaultAlpha;
    std::uint64_t bench_seed = 1;
    auto* bench = app.add_subcommand("bench", "time binned, iterative and sort-based variants");
    bench->add_option("--sizes", bench_sizes)->delimiter(',');
    bench->add_option("--alpha", bench_alpha);
    bench->add_option("--seed", bench_seed);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (reject->parsed()) return do_reject(reject_opts, false, out);
        if (qvalues->parsed()) return do_reject(qvalue_opts, true, out);
        if (validate->parsed()) return do_validate(validate_in, validate_alpha, validate_threads, out);
        if (split->parsed()) {
            const auto manifest = split_fixed(split_input, parse_format(split_format), split_size, split_dir);
            out << "m=" << manifest.m_global << " chunks=" << manifest.chunks.size() << " manifest="
                << (fs::path(split_dir) / "manifest.json").string() << '\n';
            return kOk;
        }
        if (simulate_cmd->parsed()) {
            sim_model.mode = parse_mode(sim_mode);
            const auto data = simulate(sim_m, sim_model, resolve_seed(sim_seed, err));
            write_lines(sim_out, data.pvalues, [](double p) { return format_double(p); });
            write_lines(sim_out + ".truth", data.truth.is_signal,
                        [](std::uint8_t f) { return f ? '1' : '0'; });
            out << "m=" << sim_m << " m1=" << data.truth.m1 << " output=" << sim_out << '\n';
            return kOk;
        }
        if (demo_cmd->parsed()) {
            ExperimentResult result;
            if (!demo_input.empty()) {
                if (demo_truth.empty()) throw ValidationError("--input needs --truth");
                const auto values = read_all(*open_source(demo_input, PValueFormat::Plain));
                result = run_inflation_on(values, read_truth(demo_truth), demo.ladder, demo.alpha);
            } else {
                demo.model.mode = parse_mode(demo_mode);
                demo.seed = resolve_seed(demo_seed, err);
                result = run_inflation_experiment(demo);
            }
            err << "# method 'union-unsafe' = per-chunk BH unioned; it does NOT control the global FDR\n";
            if (demo_out.empty()) {
                write_inflation_csv(result, out);
            } else {
                std::ofstream f(demo_out, std::ios::binary | std::ios::trunc);
                if (!f) throw IoError("cannot open '" + demo_out + "' for writing");
                write_inflation_csv(result, f);
                if (!f) throw IoError("write failure on '" + demo_out + "'");
            }
            return kOk;
        }
        if (bench->parsed()) {
            const auto rows = bench_scaling(bench_sizes, bench_alpha, bench_seed);
            write_bench_csv(rows, out);
            return kOk;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kValidation;
}

}  // namespace fastlsu::cli
