#include "figforge/filters/chain.hpp"

#include "figforge/common/error.hpp"

namespace figforge::filters {

ChainResult run_chain(const CodeSample& code, const render::RenderOutcome& outcome, const FilterConfig& cfg,
                      DedupStore& dedup) {
  if (outcome.status != render::RenderStatus::Success || outcome.png.empty()) {
    throw Error(ErrorCode::PreconditionViolation,
                "run_chain needs a successful render, got " + std::string(render::to_string(outcome.status)));
  }
  return run_chain(code, pixel_stats(outcome.png), cfg, dedup);
}

ChainResult run_chain(const CodeSample& code, const PixelStats& stats, const FilterConfig& cfg, DedupStore& dedup) {
  ChainResult result;
  result.stats = stats;
  auto record = [&](const char* stage, FilterVerdict v) {
    result.audit.push_back({stage, v});
    result.verdict = std::move(v);
    return result.verdict.passed();
  };

  const ContentDigest key = dedup_key(code);
  if (!dedup.admit(key, normalize_code(code))) {
    record("dedup", FilterVerdict::reject(RejectReason::Duplicate, key.hex.substr(0, 16)));
    return result;
  }
  record("dedup", FilterVerdict::pass());
  if (!record("keyword", keyword_filter(code, cfg))) return result;
  if (!record("length", length_filter(code, cfg))) return result;
  if (!record("blank", blank_filter(stats, cfg))) return result;
  record("white_black", white_black_filter(stats, cfg));
  return result;
}

std::vector<nlohmann::json> audit_lines(const std::string& code_id, const ChainResult& result) {
  std::vector<nlohmann::json> out;
  for (const auto& s : result.audit) {
    nlohmann::json j = to_json(s.verdict);
    j["code_id"] = code_id;
    j["stage"] = s.stage;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace figforge::filters
