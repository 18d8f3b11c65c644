#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "figforge/corpus/asset.hpp"
#include "figforge/modelgate/types.hpp"

namespace figforge::render {

using modelgate::CodeSample;
using modelgate::Dialect;

enum class RenderStatus { Success, CompileFail, RuntimeFail, Timeout, EmptyOutput, ForbiddenAccess };

std::string_view to_string(RenderStatus s);
RenderStatus parse_render_status(std::string_view name);

struct RenderJob {
  CodeSample code;
  double timeout_s = 60.0;
  std::uint32_t raster_dpi = 150;
  /// Parent for the job's fresh workdir; the renderer's scratch root when empty.
  std::filesystem::path scratch_root;
};

struct RenderOutcome {
  std::string outcome_id;
  std::string code_id;
  Dialect dialect = Dialect::Tikz;
  RenderStatus status = RenderStatus::EmptyOutput;
  std::optional<corpus::ImageAsset> image;  // present iff status == Success
  std::vector<std::uint8_t> png;            // encoded raster backing `image`
  std::string log;
  double wall_ms = 0.0;
};

/// Deterministic link between a code sample and its render.
std::string outcome_id_for(const CodeSample& code);

struct SuccessRate {
  double overall = 0.0;
  std::map<Dialect, double> per_dialect;
  std::map<Dialect, std::size_t> attempted;
  std::map<Dialect, std::size_t> succeeded;
};

/// count(SUCCESS) / count(all). Throws Error(EmptyList) on an empty list.
SuccessRate success_rate(const std::vector<RenderOutcome>& outcomes);

}  // namespace figforge::render
