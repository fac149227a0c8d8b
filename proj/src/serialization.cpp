// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/serialization.hpp"

#include <json.hpp>

#include "asap/errors.hpp"

namespace asap {

namespace {

using ordered_json = nlohmann::ordered_json;

std::size_t parse_index(const std::string& key) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(key, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != key.size()) {
        throw FormatError("merge key '" + key + "' is not an index", 0);
    }
    return static_cast<std::size_t>(v);
}

cost::Stage parse_stage(const ordered_json& j, const cost::ModelConfig& cfg) {
    if (!j.is_object() || !j.contains("layers") || !j["layers"].is_number_unsigned()) {
        throw FormatError("schedule stage needs an unsigned \"layers\" field", 0);
    }
    cost::Stage s;
    s.layers = j["layers"].get<std::uint64_t>();
    const bool has_tokens = j.contains("tokens");
    const bool has_ratio = j.contains("ratio");
    if (has_tokens == has_ratio) {
        throw FormatError("schedule stage needs exactly one of \"tokens\" or \"ratio\"", 0);
    }
    if (has_tokens) {
        if (!j["tokens"].is_number_unsigned()) {
            throw FormatError("\"tokens\" must be an unsigned integer", 0);
        }
        s.tokens = j["tokens"].get<std::uint64_t>();
    } else {
        if (!j["ratio"].is_number()) {
            throw FormatError("\"ratio\" must be a number", 0);
        }
        s.tokens = cost::tokens_for_ratio(j["ratio"].get<double>(), cfg.visual_tokens_v);
    }
    return s;
}

cost::PruneSchedule parse_stage_list(const ordered_json& j, const cost::ModelConfig& cfg) {
    if (!j.is_array()) {
        throw FormatError("schedule must be a list of stages", 0);
    }
    cost::PruneSchedule sched;
    for (const auto& stage : j) {
        sched.stages.push_back(parse_stage(stage, cfg));
    }
    return sched;
}

}  // namespace

std::string prune_result_to_json(const PruneResult& result) {
    ordered_json j;
    j["kept"] = result.kept_indices;
    ordered_json merges = ordered_json::object();
    for (const auto& [dst, srcs] : result.merge_map) {
        merges[std::to_string(dst)] = srcs;
    }
    j["merges"] = std::move(merges);
    j["salvaged"] = result.salvaged_indices;
    j["shortfall"] = result.shortfall;
    return j.dump(2);
}

PruneResult prune_result_from_json(std::string_view json) {
    ordered_json j;
    try {
        j = ordered_json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    PruneResult r;
    try {
        r.kept_indices = j.at("kept").get<std::vector<std::size_t>>();
        for (const auto& [key, srcs] : j.at("merges").items()) {
            r.merge_map.emplace(parse_index(key), srcs.get<std::vector<std::size_t>>());
        }
        r.salvaged_indices = j.at("salvaged").get<std::vector<std::size_t>>();
        r.shortfall = j.at("shortfall").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed prune result: ") + e.what(), 0);
    }
    return r;
}

std::vector<cost::ReportRow> parse_schedules(std::string_view json, const cost::ModelConfig& cfg) {
    ordered_json j;
    try {
        j = ordered_json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid schedule JSON: ") + e.what(), e.byte);
    }
    std::vector<cost::ReportRow> rows;
    if (j.is_array()) {
        rows.push_back({"custom", parse_stage_list(j, cfg)});
    } else if (j.is_object()) {
        for (const auto& [id, stages] : j.items()) {
            rows.push_back({id, parse_stage_list(stages, cfg)});
        }
    } else {
        throw FormatError("schedule JSON must be a list of stages or an object of named schedules", 0);
    }
    return rows;
}

}  // namespace asap
