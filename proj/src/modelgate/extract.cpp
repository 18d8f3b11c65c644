#include "figforge/modelgate/extract.hpp"

#include "figforge/common/text.hpp"

namespace figforge::modelgate {

namespace {
constexpr std::string_view kFence = "```";

bool at_line_start(std::string_view text, std::size_t pos) { return pos == 0 || text[pos - 1] == '\n'; }
}  // namespace

std::vector<FencedBlock> find_fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find(kFence, pos);
    while (open != std::string_view::npos && !at_line_start(text, open)) {
      open = text.find(kFence, open + 1);
    }
    if (open == std::string_view::npos) break;
    const std::size_t eol = text.find('\n', open);
    if (eol == std::string_view::npos) break;
    const std::string_view label = text.substr(open + kFence.size(), eol - open - kFence.size());

    const std::size_t body = eol + 1;
    std::size_t close_fence;
    std::string_view content;
    if (text.substr(body, kFence.size()) == kFence) {
      close_fence = body;  // "```tag\n```"
    } else {
      const std::size_t nl = text.find("\n```", eol);
      if (nl == std::string_view::npos) break;
      close_fence = nl + 1;
      content = text.substr(body, nl - body);
    }
    FencedBlock b;
    b.label = std::string(text::trim(label));
    b.content = std::string(content);
    b.offset = open;
    blocks.push_back(std::move(b));
    const std::size_t close_eol = text.find('\n', close_fence);
    if (close_eol == std::string_view::npos) break;
    pos = close_eol + 1;
  }
  return blocks;
}

bool label_matches(Dialect dialect, std::string_view label) {
  if (dialect == Dialect::Tikz) return text::iequals(label, "tikz") || text::iequals(label, "latex");
  return text::iequals(label, "python");
}

std::optional<std::string> extract_code_block(std::string_view text, Dialect dialect) {
  for (auto& b : find_fenced_blocks(text)) {
    if (label_matches(dialect, b.label) && !b.content.empty()) return std::move(b.content);
  }
  return std::nullopt;
}

}  // namespace figforge::modelgate
