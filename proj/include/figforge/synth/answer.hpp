#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace figforge::synth {

enum class AnswerKind { Numeric, Choice, Text, Proven, None };
std::string_view to_string(AnswerKind k);
AnswerKind parse_answer_kind(std::string_view name);

// Exactly the payload matching `kind` is set; NONE and PROVEN carry nothing.
struct ExtractedAnswer {
  AnswerKind kind = AnswerKind::None;
  std::optional<double> numeric_value;
  std::optional<char> choice;
  std::optional<std::string> text_norm;

  bool operator==(const ExtractedAnswer&) const = default;

  static ExtractedAnswer none() { return {}; }
  static ExtractedAnswer numeric(double v) { return {AnswerKind::Numeric, v, std::nullopt, std::nullopt}; }
  static ExtractedAnswer letter(char c) { return {AnswerKind::Choice, std::nullopt, c, std::nullopt}; }
  static ExtractedAnswer text(std::string t) { return {AnswerKind::Text, std::nullopt, std::nullopt, std::move(t)}; }
  static ExtractedAnswer proven() { return {AnswerKind::Proven, std::nullopt, std::nullopt, std::nullopt}; }
};

/// Numeric value of a short math expression: integers, decimals, a/b,
/// \frac{a}{b}, percentages (50% -> 0.5), thousands separators, a leading
/// "x =" and a trailing degree mark are understood.
std::optional<double> parse_numeric(std::string_view expr);

/// NUMERIC, CHOICE (one letter A-E), PROVEN, else TEXT (lowercased, whitespace
/// collapsed). NONE for an empty expression.
ExtractedAnswer classify_answer(std::string_view expr);

/// Precedence: last \boxed{...}; then the last final-answer marker line
/// ("final answer", "the answer is", "answer:"); then a trailing line that is
/// just an option letter; then a trailing "proven" / end-of-proof line.
ExtractedAnswer extract_answer(std::string_view solution);

/// Contents of the last \boxed{...} with nested braces, if any.
std::optional<std::string> last_boxed(std::string_view text);

/// False if either side is NONE or the kinds differ. Numbers agree when
/// |x - y| <= tol * max(1, |x|, |y|).
bool answers_agree(const ExtractedAnswer& a, const ExtractedAnswer& b, double tol = 1e-6);

nlohmann::json to_json(const ExtractedAnswer& a);
ExtractedAnswer answer_from_json(const nlohmann::json& j);
/// The scalar written as answer_value in problem records.
nlohmann::json answer_value(const ExtractedAnswer& a);

}  // namespace figforge::synth
