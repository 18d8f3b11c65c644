#include "figforge/render/types.hpp"

#include "figforge/common/error.hpp"

namespace figforge::render {

std::string_view to_string(RenderStatus s) {
  switch (s) {
    case RenderStatus::Success: return "SUCCESS";
    case RenderStatus::CompileFail: return "COMPILE_FAIL";
    case RenderStatus::RuntimeFail: return "RUNTIME_FAIL";
    case RenderStatus::Timeout: return "TIMEOUT";
    case RenderStatus::EmptyOutput: return "EMPTY_OUTPUT";
    case RenderStatus::ForbiddenAccess: return "FORBIDDEN_ACCESS";
  }
  return "UNKNOWN";
}

RenderStatus parse_render_status(std::string_view name) {
  for (auto s : {RenderStatus::Success, RenderStatus::CompileFail, RenderStatus::RuntimeFail,
                 RenderStatus::Timeout, RenderStatus::EmptyOutput, RenderStatus::ForbiddenAccess}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown render status '" + std::string(name) + "'");
}

std::string outcome_id_for(const CodeSample& code) { return "render-" + sha256(code.code_id).prefix(20); }

SuccessRate success_rate(const std::vector<RenderOutcome>& outcomes) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyList, "success_rate of an empty outcome list");
  SuccessRate r;
  std::size_t ok = 0;
  for (const auto& o : outcomes) {
    ++r.attempted[o.dialect];
    if (o.status == RenderStatus::Success) {
      ++ok;
      ++r.succeeded[o.dialect];
    }
  }
  r.overall = static_cast<double>(ok) / static_cast<double>(outcomes.size());
  for (const auto& [d, n] : r.attempted) {
    r.per_dialect[d] = static_cast<double>(r.succeeded[d]) / static_cast<double>(n);
  }
  return r;
}

}  // namespace figforge::render
