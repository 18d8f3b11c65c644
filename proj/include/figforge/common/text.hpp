#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace figforge::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Replaces every run of whitespace with one space and trims the ends.
std::string collapse_whitespace(std::string_view s);
/// Number of UTF-8 code points; continuation bytes are not counted.
std::size_t utf8_length(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool iequals(std::string_view a, std::string_view b);

}  // namespace figforge::text
