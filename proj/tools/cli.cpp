// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asap/cost_model.hpp"
#include "asap/errors.hpp"
#include "asap/graymap.hpp"
#include "asap/harness.hpp"
#include "asap/masking.hpp"
#include "asap/matrix_io.hpp"
#include "asap/numerics.hpp"
#include "asap/pruning.hpp"
#include "asap/serialization.hpp"
#include "asap/simd.hpp"

namespace asap::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

struct HarnessOptions {
    std::uint64_t seed = 0;
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t head_dim = 16;
    std::size_t ffn = 64;
    std::size_t prune_layer = 2;
    std::size_t system_tokens = 4;
    std::size_t visual_tokens = 64;
    std::size_t text_tokens = 8;

    harness::ToyDecoderConfig decoder() const {
        harness::ToyDecoderConfig cfg;
        cfg.layers = layers;
        cfg.heads = heads;
        cfg.head_dim = head_dim;
        cfg.ffn_m = ffn;
        cfg.prune_layer = prune_layer;
        cfg.seed = seed;
        return cfg;
    }

    harness::LayoutSpec layout() const { return {system_tokens, visual_tokens, text_tokens, heads * head_dim}; }
};

struct PruneOptions {
    std::size_t budget = 0;
    double lambda_max = kDefaultLambdaMax;
    double threshold = kDefaultSimilarityThreshold;
    double epsilon = kDefaultEpsilon;
    std::string selection = "text_attention";

    PruneConfig config() const {
        PruneConfig cfg;
        cfg.budget_k = budget;
        cfg.similarity_threshold = threshold;
        cfg.selection_mode = selection_mode_from_string(selection);
        cfg.mask.lambda_max = lambda_max;
        cfg.mask.epsilon = epsilon;
        return cfg;
    }
};

struct InputOptions {
    bool synthetic = false;
    std::string hidden_path;
    std::string query_path;
    std::string key_path;
    std::string alignment_path;
};

void add_harness_options(CLI::App* cmd, HarnessOptions& h) {
    cmd->add_option("--seed", h.seed, "Random seed (ASAP_SEED overrides)")->capture_default_str();
    cmd->add_option("--layers", h.layers, "Toy decoder layers")->capture_default_str();
    cmd->add_option("--heads", h.heads, "Attention heads")->capture_default_str();
    cmd->add_option("--head-dim", h.head_dim, "Per-head width (even)")->capture_default_str();
    cmd->add_option("--ffn", h.ffn, "FFN intermediate width")->capture_default_str();
    cmd->add_option("--prune-layer", h.prune_layer, "Layer after which pruning runs")->capture_default_str();
    cmd->add_option("--system-tokens", h.system_tokens, "System prompt tokens")->capture_default_str();
    cmd->add_option("--visual-tokens", h.visual_tokens, "Visual tokens")->capture_default_str();
    cmd->add_option("--text-tokens", h.text_tokens, "Text query tokens")->capture_default_str();
}

void add_prune_options(CLI::App* cmd, PruneOptions& p, bool budget_required) {
    auto* budget = cmd->add_option("--budget", p.budget, "Visual tokens to keep");
    if (budget_required) {
        budget->required();
    } else {
        budget->capture_default_str();
    }
    cmd->add_option("--lambda-max", p.lambda_max, "Maximum forward visibility in (0, 1]")->capture_default_str();
    cmd->add_option("--threshold", p.threshold, "Merge similarity threshold")->capture_default_str();
    cmd->add_option("--epsilon", p.epsilon, "Normalization and mask floor")->capture_default_str();
    cmd->add_option("--selection", p.selection, "Selection score")
        ->check(CLI::IsMember({"text_attention", "salience"}))
        ->capture_default_str();
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_flag("--synthetic", in.synthetic, "Run the toy decoder on generated inputs");
    cmd->add_option("--hidden", in.hidden_path, "Hidden states (ASAPMAT1)");
    cmd->add_option("--query", in.query_path, "Queries (ASAPMAT1)");
    cmd->add_option("--key", in.key_path, "Keys (ASAPMAT1)");
    cmd->add_option("--alignment", in.alignment_path, "Pre-softmax alignment, instead of --query/--key");
}

struct PruneRun {
    SequenceLayout input_layout;
    PassOutput pass;
};

PruneRun run_prune(const InputOptions& in, const HarnessOptions& h, const PruneOptions& p) {
    const PruneConfig cfg = p.config();
    PruneRun run;
    if (in.synthetic) {
        const harness::ToyDecoder decoder(h.decoder());
        const auto seq = harness::generate_sequence(h.layout(), h.seed);
        run.input_layout = seq.layout;
        cfg.validate(seq.layout);
        auto fwd = decoder.forward(seq.hidden, seq.layout, cfg);
        run.pass = std::move(*fwd.prune);
        return run;
    }
    if (in.hidden_path.empty()) {
        throw ConfigError("provide --synthetic or --hidden with --query/--key or --alignment");
    }
    const Matrix hidden = read_matrix(in.hidden_path);
    if (h.system_tokens + h.visual_tokens > hidden.rows()) {
        throw ConfigError("system and visual tokens exceed the " + std::to_string(hidden.rows()) +
                          " rows of the hidden matrix");
    }
    run.input_layout = SequenceLayout::from_lengths(h.system_tokens, h.visual_tokens,
                                                    hidden.rows() - h.system_tokens - h.visual_tokens);
    if (!in.alignment_path.empty()) {
        run.pass = asap_pass_from_alignment(hidden, read_matrix(in.alignment_path), run.input_layout, cfg);
    } else if (!in.query_path.empty() && !in.key_path.empty()) {
        run.pass = asap_pass(hidden, read_matrix(in.query_path), read_matrix(in.key_path), run.input_layout, cfg);
    } else {
        throw ConfigError("file input needs --alignment or both --query and --key");
    }
    return run;
}

std::pair<std::size_t, std::size_t> grid_for(std::size_t tokens, const std::string& grid) {
    if (!grid.empty()) {
        const auto x = grid.find('x');
        std::size_t rows = 0;
        std::size_t cols = 0;
        try {
            if (x == std::string::npos) {
                throw std::invalid_argument(grid);
            }
            rows = std::stoul(grid.substr(0, x));
            cols = std::stoul(grid.substr(x + 1));
        } catch (const std::exception&) {
            throw ConfigError("--grid must look like ROWSxCOLS, got '" + grid + "'");
        }
        if (rows * cols != tokens) {
            throw ConfigError("grid " + grid + " does not hold " + std::to_string(tokens) + " visual tokens");
        }
        return {rows, cols};
    }
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(tokens))));
    if (side * side != tokens) {
        throw ConfigError(std::to_string(tokens) + " visual tokens are not a square grid; pass --grid ROWSxCOLS");
    }
    return {side, side};
}

ordered_json stats_json(const std::vector<double>& samples) {
    double mean = 0.0;
    for (double s : samples) {
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) {
        var += (s - mean) * (s - mean);
    }
    var = samples.size() > 1 ? var / static_cast<double>(samples.size() - 1) : 0.0;
    ordered_json j;
    j["samples_us"] = samples;
    j["mean_us"] = mean;
    j["stddev_us"] = std::sqrt(var);
    return j;
}

template <typename F>
double time_us(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

std::vector<std::size_t> cache_rows(const harness::KvCache& cache) {
    std::vector<std::size_t> rows;
    for (std::size_t l = 0; l < cache.layers.size(); ++l) {
        rows.push_back(cache.rows(l));
    }
    return rows;
}

int cmd_prune(const InputOptions& in, const HarnessOptions& h, const PruneOptions& p, const std::string& hidden_out,
              std::ostream& out) {
    const PruneRun run = run_prune(in, h, p);
    if (!hidden_out.empty()) {
        write_matrix(hidden_out, run.pass.hidden);
    }
    out << prune_result_to_json(run.pass.result) << '\n';
    return kExitOk;
}

int cmd_trace(const InputOptions& in, const HarnessOptions& h, const PruneOptions& p, const std::string& path,
              const std::string& grid, const std::string& kind, std::ostream& out) {
    const PruneRun run = run_prune(in, h, p);
    const auto [rows, cols] = grid_for(run.input_layout.visual.size(), grid);
    std::ofstream file(path);
    if (!file) {
        throw Error("cannot open " + path + " for writing");
    }
    if (kind == "penalty") {
        write_penalty_graymap(file, run.pass.salience, p.config().mask, rows, cols);
    } else {
        write_graymap(file, rows, cols, prune_status_pixels(run.pass.result, run.input_layout.visual));
    }
    ordered_json j;
    j["out"] = path;
    j["kind"] = kind;
    j["rows"] = rows;
    j["cols"] = cols;
    j["kept"] = run.pass.result.kept_indices.size();
    out << j.dump() << '\n';
    return kExitOk;
}

struct FlopsOptions {
    std::string preset;
    std::uint64_t d = 0;
    std::uint64_t m = 0;
    std::uint64_t layers = 0;
    std::uint64_t visual = 0;
    std::uint64_t kv_bytes = 0;
    std::string schedule_path;
    std::vector<std::uint64_t> tokens;
    std::vector<double> ratios;
};

int cmd_flops(const FlopsOptions& f, std::ostream& out) {
    cost::ModelConfig cfg;
    if (!f.preset.empty()) {
        const auto p = cost::preset(f.preset);
        if (!p) {
            throw ConfigError("unknown preset '" + f.preset + "'");
        }
        cfg = *p;
    }
    if (f.d) cfg.hidden_d = f.d;
    if (f.m) cfg.ffn_m = f.m;
    if (f.layers) cfg.layers_L = f.layers;
    if (f.visual) cfg.visual_tokens_v = f.visual;
    if (f.kv_bytes) cfg.kv_bytes_per_elem = f.kv_bytes;
    cfg.validate();

    std::vector<cost::ReportRow> rows{{"vanilla", cost::PruneSchedule::identity(cfg)}};
    for (std::uint64_t t : f.tokens) {
        rows.push_back({"tokens-" + std::to_string(t), cost::PruneSchedule::uniform(cfg, t)});
    }
    for (double r : f.ratios) {
        std::ostringstream id;
        id << "ratio-" << r;
        rows.push_back({id.str(), cost::PruneSchedule::uniform(cfg, cost::tokens_for_ratio(r, cfg.visual_tokens_v))});
    }
    if (!f.schedule_path.empty()) {
        std::ifstream in(f.schedule_path);
        if (!in) {
            throw FormatError("cannot open schedule " + f.schedule_path, 0);
        }
        std::stringstream buf;
        buf << in.rdbuf();
        auto parsed = parse_schedules(buf.str(), cfg);
        rows.insert(rows.end(), parsed.begin(), parsed.end());
    }
    out << cost::csv_report(rows, cfg);
    return kExitOk;
}

int cmd_demo(const HarnessOptions& h, const PruneOptions& p, std::size_t rope_draws, std::ostream& out) {
    const harness::ToyDecoder decoder(h.decoder());
    const auto seq = harness::generate_sequence(h.layout(), h.seed);
    const PruneConfig cfg = p.config();
    const auto plain = decoder.forward(seq.hidden, seq.layout);
    const auto pruned = decoder.forward(seq.hidden, seq.layout, cfg);

    ordered_json j;
    j["kernels"] = std::string(simd::to_string(simd::active().backend));
    j["config"] = {{"seed", h.seed},           {"layers", h.layers},           {"heads", h.heads},
                   {"head_dim", h.head_dim},   {"ffn", h.ffn},                 {"prune_layer", h.prune_layer},
                   {"budget", p.budget},       {"lambda_max", p.lambda_max},   {"threshold", p.threshold},
                   {"selection", p.selection}};
    j["sequence"] = {{"system", h.system_tokens}, {"visual", h.visual_tokens}, {"text", h.text_tokens}};
    j["unpruned"] = {{"output_rows", plain.hidden.rows()}, {"cache_rows", cache_rows(plain.cache)}};
    j["pruned"] = {{"output_rows", pruned.hidden.rows()},
                   {"cache_rows", cache_rows(pruned.cache)},
                   {"positions", pruned.positions},
                   {"result", ordered_json::parse(prune_result_to_json(pruned.prune->result))}};

    // Image-token cost of the toy stack, full vs. pruned after prune_layer.
    const cost::ModelConfig toy{h.heads * h.head_dim, h.ffn, h.layers, h.visual_tokens, 8};
    const cost::PruneSchedule sched{{{h.prune_layer + 1, h.visual_tokens},
                                     {h.layers - h.prune_layer - 1, pruned.prune->result.kept_indices.size()}}};
    j["flops"] = {{"unpruned", cost::schedule_flops(cost::PruneSchedule::identity(toy), toy)},
                  {"pruned", cost::schedule_flops(sched, toy)},
                  {"ratio", cost::flops_ratio(sched, toy)}};

    const std::vector<std::size_t> distances{0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    harness::RopeDecayConfig rcfg;
    rcfg.draws = rope_draws;
    ordered_json decay = ordered_json::array();
    for (const auto& row : harness::rope_decay_demo(h.seed, distances, rcfg)) {
        decay.push_back({{"distance", row.distance},
                         {"mean_score", row.mean_score},
                         {"mean_abs_score", row.mean_abs_score}});
    }
    j["rope_decay"] = std::move(decay);
    out << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_bench(const HarnessOptions& h, const PruneOptions& p, std::size_t repetitions, std::ostream& out) {
    if (repetitions == 0) {
        throw ConfigError("--repetitions must be at least 1");
    }
    const harness::ToyDecoder decoder(h.decoder());
    const auto seq = harness::generate_sequence(h.layout(), h.seed);
    const PruneConfig cfg = p.config();
    cfg.validate(seq.layout);
    const auto heads = decoder.layer0_alignment(seq.hidden);
    const Matrix w = aggregate_heads(heads, HeadAggregation::mean);

    std::vector<double> t_mask, t_attn, t_select, t_merge;
    std::size_t merges = 0;
    std::size_t salvaged = 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
        SalienceProfile sal;
        Matrix mask;
        Matrix attn;
        Selection sel;
        t_mask.push_back(time_us([&] {
            sal = compute_salience(w, seq.layout, cfg.mask.epsilon);
            mask = build_bidirectional_mask(sal, seq.layout, cfg.mask);
        }));
        t_attn.push_back(time_us([&] { attn = masked_attention(w, mask); }));
        t_select.push_back(time_us([&] { sel = select_topk(attn, sal, seq.layout, cfg); }));
        t_merge.push_back(time_us([&] {
            const std::size_t v0 = seq.layout.visual.begin;
            std::vector<double> s_sel;
            for (std::size_t i : sel.selected) {
                s_sel.push_back(sal.normalized[i - v0]);
            }
            const auto cons =
                consolidate(seq.hidden.gather_rows(sel.selected), sel.selected, s_sel, cfg.similarity_threshold);
            std::vector<double> pool_mass;
            for (std::size_t i : sel.pruned_pool) {
                pool_mass.push_back(sal.raw_mass[i - v0]);
            }
            merges = cons.absorbed_count();
            salvaged = salvage(sel.pruned_pool, pool_mass, merges).indices.size();
        }));
    }

    const std::size_t n = seq.layout.total_len();
    const std::size_t k = cfg.budget_k;
    ordered_json j;
    j["kernels"] = std::string(simd::to_string(simd::active().backend));
    j["repetitions"] = repetitions;
    j["sequence_tokens"] = n;
    j["visual_tokens"] = h.visual_tokens;
    j["budget"] = k;
    j["stages"] = {{"mask_build", stats_json(t_mask)},
                   {"attention", stats_json(t_attn)},
                   {"selection", stats_json(t_select)},
                   {"consolidation", stats_json(t_merge)}};
    j["operation_counts"] = {{"alignment_entries", n * n},
                             {"mask_entries", n * n},
                             {"similarity_pairs", k * (k - 1) / 2},
                             {"merged_tokens", merges},
                             {"salvaged_tokens", salvaged}};
    out << j.dump(2) << '\n';
    return kExitOk;
}

void apply_seed_override(HarnessOptions& h) {
    const char* env = std::getenv("ASAP_SEED");
    if (env == nullptr || *env == '\0') {
        return;
    }
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(env, &pos);
        if (pos != std::string(env).size()) {
            throw std::invalid_argument(env);
        }
        h.seed = v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("ASAP_SEED is not an unsigned integer: '") + env + "'");
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual-token pruning toolkit: prune runs, FLOPs reports, mask traces, benchmarks", "asap"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    HarnessOptions harness_opts;
    PruneOptions prune_opts;
    InputOptions input_opts;
    std::string hidden_out;
    std::string trace_out;
    std::string trace_grid;
    std::string trace_kind = "status";
    FlopsOptions flops_opts;
    std::size_t rope_draws = 1000;
    std::size_t repetitions = 5;

    auto* prune = app.add_subcommand("prune", "Run a pruning pass and print the result as JSON");
    add_input_options(prune, input_opts);
    add_harness_options(prune, harness_opts);
    add_prune_options(prune, prune_opts, true);
    prune->add_option("--hidden-out", hidden_out, "Write the compacted hidden states (ASAPMAT1)");

    auto* trace = app.add_subcommand("trace", "Write a graymap of which visual tokens survive pruning");
    add_input_options(trace, input_opts);
    add_harness_options(trace, harness_opts);
    add_prune_options(trace, prune_opts, true);
    trace->add_option("--out", trace_out, "Output .pgm path")->required();
    trace->add_option("--grid", trace_grid, "Patch grid ROWSxCOLS (default: square)");
    trace->add_option("--kind", trace_kind, "status: kept/salvaged/merged/dropped; penalty: mask penalties")
        ->check(CLI::IsMember({"status", "penalty"}))
        ->capture_default_str();

    auto* flops = app.add_subcommand("flops", "Image-token FLOPs and KV-cache report as CSV");
    flops->add_option("--preset", flops_opts.preset, "llava-1.5-7b | llava-1.5-13b | llava-next-7b");
    flops->add_option("--d", flops_opts.d, "Hidden size");
    flops->add_option("--m", flops_opts.m, "FFN intermediate size");
    flops->add_option("--layers", flops_opts.layers, "Decoder layers");
    flops->add_option("--visual-tokens", flops_opts.visual, "Unpruned image tokens");
    flops->add_option("--kv-bytes", flops_opts.kv_bytes, "Bytes per cached element");
    flops->add_option("--schedule", flops_opts.schedule_path, "Schedule JSON file");
    flops->add_option("--tokens", flops_opts.tokens, "Keep this many tokens in every layer (repeatable)");
    flops->add_option("--ratio", flops_opts.ratios, "Keep ceil(ratio * v) tokens in every layer (repeatable)");

    auto* demo = app.add_subcommand("demo", "Run the toy decoder with and without pruning; JSON report");
    add_harness_options(demo, harness_opts);
    prune_opts.budget = 16;
    add_prune_options(demo, prune_opts, false);
    demo->add_option("--rope-draws", rope_draws, "Random draws for the RoPE decay table")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Time the pruning stages; JSON report");
    add_harness_options(bench, harness_opts);
    add_prune_options(bench, prune_opts, false);
    bench->add_option("--repetitions", repetitions, "Timed repetitions")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        apply_seed_override(harness_opts);
        if (prune->parsed()) {
            return cmd_prune(input_opts, harness_opts, prune_opts, hidden_out, out);
        }
        if (trace->parsed()) {
            return cmd_trace(input_opts, harness_opts, prune_opts, trace_out, trace_grid, trace_kind, out);
        }
        if (flops->parsed()) {
            return cmd_flops(flops_opts, out);
        }
        if (demo->parsed()) {
            return cmd_demo(harness_opts, prune_opts, rope_draws, out);
        }
        if (bench->parsed()) {
            return cmd_bench(harness_opts, prune_opts, repetitions, out);
        }
    } catch (const FormatError& e) {
        err << "asap: malformed input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "asap: invalid configuration: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ShapeError& e) {
        err << "asap: inconsistent input shapes: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "asap: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace asap::cli
