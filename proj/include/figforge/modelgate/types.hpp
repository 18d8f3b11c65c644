#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "figforge/corpus/asset.hpp"

namespace figforge::modelgate {

enum class Dialect { Tikz, PlotScript };

std::string_view to_string(Dialect d);        // "TIKZ" / "PLOTSCRIPT"
Dialect parse_dialect(std::string_view name);
std::string_view display_name(Dialect d);     // "TikZ" / "Python"
std::string_view fence_label(Dialect d);      // "tikz" / "python"

struct Provenance {
  std::string seed_asset_id;
  std::uint32_t round_index = 0;
  std::string endpoint_id;
  double temperature = 0.0;
  std::string parent_code_id;  // set for translated samples

  bool operator==(const Provenance&) const = default;
};

struct CodeSample {
  std::string code_id;
  Dialect dialect = Dialect::Tikz;
  std::string text;
  Provenance provenance;

  bool operator==(const CodeSample&) const = default;
};

/// Builds a sample with a deterministic id over (dialect, text, seed, round, parent).
/// Throws Error(PreconditionViolation) if text is empty.
CodeSample make_code_sample(Dialect dialect, std::string text, Provenance provenance);

nlohmann::json to_json(const CodeSample& code);
CodeSample code_sample_from_json(const nlohmann::json& j);

enum class TemplateId { Img2Tikz, Img2Plot, Tikz2Plot, K12Process, QuestionSynth, Solve };

std::string_view to_string(TemplateId id);
TemplateId parse_template_id(std::string_view name);

struct ExtractionSpec {
  Dialect dialect;
  Provenance provenance;
};

struct GenerationRequest {
  TemplateId template_id = TemplateId::Img2Tikz;
  std::map<std::string, std::string> slots;
  std::optional<corpus::ImageAsset> image;
  double temperature = 0.0;
  std::uint32_t max_tokens = 4096;
  std::string endpoint_id;
  std::optional<ExtractionSpec> expect;  // when set, the first matching fence is extracted
};

struct GenerationResult {
  std::string raw_text;
  std::optional<CodeSample> extracted_code;
  std::string endpoint_id;
  std::uint32_t attempt_count = 0;
  double latency_ms = 0.0;
  bool no_code_block = false;
};

}  // namespace figforge::modelgate
