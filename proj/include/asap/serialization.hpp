// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Text formats shared by the CLI and its consumers.
//
// PruneResult:
//   {"kept": [int], "merges": {"<dst>": [src, ...]}, "salvaged": [int], "shortfall": int}
// Merge keys appear in ascending numeric order. Hidden states travel
// separately in the binary matrix format.
//
// Schedules: either a list of stages, [{"layers": L, "tokens": v} | {"layers": L, "ratio": r}],
// or an object mapping schedule ids to such lists.

#include <string>
#include <string_view>
#include <vector>

#include "asap/cost_model.hpp"
#include "asap/pruning.hpp"

namespace asap {

std::string prune_result_to_json(const PruneResult& result);

/// Reads everything except merged_hidden. Throws FormatError.
PruneResult prune_result_from_json(std::string_view json);

/// Throws FormatError for malformed JSON or stages, ConfigError for bad ratios.
std::vector<cost::ReportRow> parse_schedules(std::string_view json, const cost::ModelConfig& cfg);

}  // namespace asap
