#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "figforge/modelgate/types.hpp"

namespace figforge::modelgate {

// A named slot and the literal placeholder it replaces in the template text.
// Placeholders are the bracketed markers used in the published prompt figures,
// so the unfilled template is the published text.
struct Slot {
  std::string_view name;
  std::string_view marker;
};

struct PromptTemplate {
  TemplateId id;
  std::string_view system_text;
  std::string_view user_text;
  std::vector<Slot> slots;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;

  bool operator==(const RenderedPrompt&) const = default;
};

/// Marker standing for the attached image in user prompts.
inline constexpr std::string_view kImageMarker = "<image>";

const PromptTemplate& prompt_template(TemplateId id);
const std::vector<TemplateId>& all_templates();

/// Fills every slot in one left-to-right pass, so slot values are never
/// re-scanned for markers. Throws Error(MissingSlot) when a declared slot has
/// no value.
RenderedPrompt render_prompt(TemplateId id, const std::map<std::string, std::string>& slots);

/// Training-response format of the image-to-code prompts: a fixed lead-in line
/// followed by the code in the dialect's fence.
std::string_view response_template(Dialect dialect);
std::string format_response(Dialect dialect, std::string_view code);
/// Exact inverse of format_response; nullopt if text does not have that shape.
std::optional<std::string> parse_response(Dialect dialect, std::string_view text);

}  // namespace figforge::modelgate
