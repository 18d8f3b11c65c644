#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/filters/dedup.hpp"
#include "figforge/filters/filters.hpp"
#include "figforge/filters/verdict.hpp"
#include "figforge/render/types.hpp"

namespace figforge::filters {

struct StageRecord {
  std::string stage;  // dedup, keyword, length, blank, white_black
  FilterVerdict verdict;
};

struct ChainResult {
  FilterVerdict verdict;
  std::vector<StageRecord> audit;  // every stage evaluated, in order
  std::optional<PixelStats> stats;
};

/// dedup -> keyword -> length -> blank -> white_black, stopping at the first
/// reject. The dedup key is claimed at the dedup stage, so a sample rejected
/// later still makes its exact copies duplicates.
///
/// Throws Error(PreconditionViolation) unless outcome.status is SUCCESS with an
/// image attached.
ChainResult run_chain(const CodeSample& code, const render::RenderOutcome& outcome, const FilterConfig& cfg,
                      DedupStore& dedup);

/// Same, with pixel statistics computed elsewhere (e.g. on a worker thread).
ChainResult run_chain(const CodeSample& code, const PixelStats& stats, const FilterConfig& cfg, DedupStore& dedup);

/// One NDJSON object per stage: {code_id, stage, decision, reason?, detail?}.
std::vector<nlohmann::json> audit_lines(const std::string& code_id, const ChainResult& result);

}  // namespace figforge::filters
