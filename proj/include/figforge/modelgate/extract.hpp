#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "figforge/modelgate/types.hpp"

namespace figforge::modelgate {

struct FencedBlock {
  std::string label;    // text after the opening ``` on its line, trimmed
  std::string content;  // bytes between the opening line's newline and "\n```"
  std::size_t offset = 0;
};

/// All complete ``` blocks in order. Unterminated trailing blocks are ignored.
std::vector<FencedBlock> find_fenced_blocks(std::string_view text);

/// Fence labels accepted for a dialect: tikz/latex for TIKZ, python for PLOTSCRIPT.
bool label_matches(Dialect dialect, std::string_view label);

/// First non-empty block whose label matches the dialect.
std::optional<std::string> extract_code_block(std::string_view text, Dialect dialect);

}  // namespace figforge::modelgate
