// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Analytic cost of the image tokens in a decoder stack. One layer holding v
// image tokens costs 4vd^2 + 2v^2d + 3vdm FLOPs (attention projections,
// attention scores/values, gated FFN). A schedule runs L_n layers at v_n
// tokens per stage.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace asap::cost {

using FlopCount = std::uint64_t;

struct ModelConfig {
    std::uint64_t hidden_d = 0;
    std::uint64_t ffn_m = 0;
    std::uint64_t layers_L = 0;
    std::uint64_t visual_tokens_v = 0;
    std::uint64_t kv_bytes_per_elem = 2;

    void validate() const;
};

/// llava-1.5-7b, llava-1.5-13b, llava-next-7b.
std::optional<ModelConfig> preset(std::string_view name);
std::vector<std::string> preset_names();

struct Stage {
    std::uint64_t layers = 0;
    std::uint64_t tokens = 0;
};

struct PruneSchedule {
    std::vector<Stage> stages;

    /// One stage holding all tokens for every layer.
    static PruneSchedule identity(const ModelConfig& cfg);
    /// One stage holding `tokens` for every layer.
    static PruneSchedule uniform(const ModelConfig& cfg, std::uint64_t tokens);
};

/// Token count for a stage given as a keep ratio in (0, 1]: ceil(ratio * v).
std::uint64_t tokens_for_ratio(double ratio, std::uint64_t visual_tokens);

/// 4vd^2 + 2v^2d + 3vdm. Throws ConfigError on 64-bit overflow.
FlopCount layer_flops(std::uint64_t tokens, const ModelConfig& cfg);

/// Throws ScheduleError unless the stage layers sum to cfg.layers_L.
FlopCount schedule_flops(const PruneSchedule& schedule, const ModelConfig& cfg);

/// schedule_flops / unpruned FLOPs.
double flops_ratio(const PruneSchedule& schedule, const ModelConfig& cfg);

/// tokens * layers * 2 (key and value) * d * bytes per element.
std::uint64_t kv_cache_bytes(std::uint64_t tokens, const ModelConfig& cfg);

/// KV bytes summed stage by stage (tokens_n in L_n layers).
std::uint64_t schedule_kv_bytes(const PruneSchedule& schedule, const ModelConfig& cfg);

/// FLOPs in TFLOPs rounded to 3 decimals, e.g. "3.817".
std::string tflops_display(FlopCount flops);

/// Ratio as a percentage rounded to 2 decimals, e.g. "32.83".
std::string percent_display(double ratio);

struct ReportRow {
    std::string schedule_id;
    PruneSchedule schedule;
};

/// CSV with header schedule_id,total_flops,tflops_display,ratio_percent,kv_bytes.
std::string csv_report(const std::vector<ReportRow>& rows, const ModelConfig& cfg);

}  // namespace asap::cost
