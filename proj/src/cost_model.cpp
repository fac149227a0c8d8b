// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/cost_model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "asap/errors.hpp"

namespace asap::cost {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw ConfigError("FLOP count overflows 64 bits");
    }
    return r;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
        throw ConfigError("FLOP count overflows 64 bits");
    }
    return r;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

void ModelConfig::validate() const {
    if (hidden_d < 1 || ffn_m < 1 || layers_L < 1 || visual_tokens_v < 1 || kv_bytes_per_elem < 1) {
        throw ConfigError("model dimensions must all be at least 1");
    }
}

std::optional<ModelConfig> preset(std::string_view name) {
    if (name == "llava-1.5-7b") {
        return ModelConfig{4096, 11008, 32, 576, 2};
    }
    if (name == "llava-1.5-13b") {
        return ModelConfig{5120, 13824, 40, 576, 2};
    }
    if (name == "llava-next-7b") {
        return ModelConfig{4096, 11008, 32, 2880, 2};
    }
    return std::nullopt;
}

std::vector<std::string> preset_names() { return {"llava-1.5-7b", "llava-1.5-13b", "llava-next-7b"}; }

PruneSchedule PruneSchedule::identity(const ModelConfig& cfg) { return uniform(cfg, cfg.visual_tokens_v); }

PruneSchedule PruneSchedule::uniform(const ModelConfig& cfg, std::uint64_t tokens) {
    return PruneSchedule{{Stage{cfg.layers_L, tokens}}};
}

std::uint64_t tokens_for_ratio(double ratio, std::uint64_t visual_tokens) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ConfigError("keep ratio must lie in (0, 1]");
    }
    return static_cast<std::uint64_t>(std::ceil(ratio * static_cast<double>(visual_tokens)));
}

FlopCount layer_flops(std::uint64_t v, const ModelConfig& cfg) {
    const std::uint64_t d = cfg.hidden_d;
    const std::uint64_t m = cfg.ffn_m;
    const FlopCount projections = mul(mul(4, v), mul(d, d));
    const FlopCount scores = mul(mul(2, mul(v, v)), d);
    const FlopCount ffn = mul(mul(3, v), mul(d, m));
    return add(add(projections, scores), ffn);
}

FlopCount schedule_flops(const PruneSchedule& schedule, const ModelConfig& cfg) {
    cfg.validate();
    std::uint64_t layers = 0;
    FlopCount total = 0;
    for (const Stage& s : schedule.stages) {
        layers = add(layers, s.layers);
        total = add(total, mul(s.layers, layer_flops(s.tokens, cfg)));
    }
    if (layers != cfg.layers_L) {
        throw ScheduleError("schedule covers " + std::to_string(layers) + " layers, model has " +
                            std::to_string(cfg.layers_L));
    }
    return total;
}

double flops_ratio(const PruneSchedule& schedule, const ModelConfig& cfg) {
    const FlopCount pruned = schedule_flops(schedule, cfg);
    const FlopCount full = schedule_flops(PruneSchedule::identity(cfg), cfg);
    return static_cast<double>(pruned) / static_cast<double>(full);
}

std::uint64_t kv_cache_bytes(std::uint64_t tokens, const ModelConfig& cfg) {
    return mul(mul(mul(tokens, cfg.layers_L), mul(2, cfg.hidden_d)), cfg.kv_bytes_per_elem);
}

std::uint64_t schedule_kv_bytes(const PruneSchedule& schedule, const ModelConfig& cfg) {
    std::uint64_t total = 0;
    for (const Stage& s : schedule.stages) {
        total = add(total, mul(mul(mul(s.tokens, s.layers), mul(2, cfg.hidden_d)), cfg.kv_bytes_per_elem));
    }
    return total;
}

std::string tflops_display(FlopCount flops) { return fixed(static_cast<double>(flops) / 1e12, 3); }

std::string percent_display(double ratio) { return fixed(ratio * 100.0, 2); }

std::string csv_report(const std::vector<ReportRow>& rows, const ModelConfig& cfg) {
    std::ostringstream out;
    out << "schedule_id,total_flops,tflops_display,ratio_percent,kv_bytes\n";
    for (const ReportRow& r : rows) {
        const FlopCount flops = schedule_flops(r.schedule, cfg);
        out << r.schedule_id << ',' << flops << ',' << tflops_display(flops) << ','
            << percent_display(flops_ratio(r.schedule, cfg)) << ',' << schedule_kv_bytes(r.schedule, cfg) << '\n';
    }
    return out.str();
}

}  // namespace asap::cost
