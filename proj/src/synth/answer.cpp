#include "figforge/synth/answer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>

#include "figforge/common/error.hpp"
#include "figforge/common/text.hpp"

namespace figforge::synth {

std::string_view to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::Numeric: return "NUMERIC";
    case AnswerKind::Choice: return "CHOICE";
    case AnswerKind::Text: return "TEXT";
    case AnswerKind::Proven: return "PROVEN";
    case AnswerKind::None: return "NONE";
  }
  return "NONE";
}

AnswerKind parse_answer_kind(std::string_view name) {
  for (auto k : {AnswerKind::Numeric, AnswerKind::Choice, AnswerKind::Text, AnswerKind::Proven, AnswerKind::None}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::SchemaInvalid, "unknown answer kind '" + std::string(name) + "'");
}

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Drops math delimiters, spacing macros and \text{...} / \mathrm{...} wrappers.
std::string strip_markup(std::string_view expr) {
  std::string s(text::trim(expr));
  while (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = std::string(text::trim(s.substr(1, s.size() - 2)));
  if (s.rfind("\\(", 0) == 0 && s.size() >= 4 && s.compare(s.size() - 2, 2, "\\)") == 0) s = s.substr(2, s.size() - 4);
  for (std::string_view m : {"\\left", "\\right", "\\,", "\\!", "\\;", "\\displaystyle"}) replace_all(s, m, "");
  static const std::regex wrapper(R"(\\(?:text|textbf|mathrm|mathbf|mbox)\s*\{([^{}]*)\})");
  s = std::regex_replace(s, wrapper, "$1");
  return std::string(text::trim(s));
}

std::optional<double> plain_number(std::string s) {
  s = std::string(text::trim(s));
  if (s.empty()) return std::nullopt;
  static const std::regex grouped(R"(^[-+]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (std::regex_match(s, grouped)) s.erase(std::remove(s.begin(), s.end(), ','), s.end());
  static const std::regex number(R"(^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$)");
  if (!std::regex_match(s, number)) return std::nullopt;
  return std::strtod(s.c_str(), nullptr);
}

std::string unquote(std::string s) {
  while (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = std::string(text::trim(std::string_view(s).substr(1, s.size() - 2)));
  }
  return s;
}

}  // namespace

std::optional<double> parse_numeric(std::string_view expr) {
  std::string s = strip_markup(expr);
  static const std::regex assign(R"(^[A-Za-z]\w*\s*=\s*)");
  s = std::regex_replace(s, assign, "");
  for (std::string_view deg : {"^\\circ", "^{\\circ}", "\\circ", "°", "\\degree"}) {
    if (s.size() >= deg.size() && s.compare(s.size() - deg.size(), deg.size(), deg) == 0) {
      s = std::string(text::trim(s.substr(0, s.size() - deg.size())));
    }
  }
  if (s.empty()) return std::nullopt;

  bool percent = false;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "\\%") == 0) {
    percent = true;
    s.resize(s.size() - 2);
  } else if (s.back() == '%') {
    percent = true;
    s.pop_back();
  }
  s = std::string(text::trim(s));

  std::optional<double> value;
  static const std::regex latex_frac(R"(^([-+]?)\\[dt]?frac\s*\{([^{}]+)\}\s*\{([^{}]+)\}$)");
  static const std::regex slash(R"(^([^/]+)/([^/]+)$)");
  std::smatch m;
  if (std::regex_match(s, m, latex_frac)) {
    auto n = plain_number(m[2].str());
    auto d = plain_number(m[3].str());
    if (n && d && *d != 0.0) value = (m[1].str() == "-" ? -1.0 : 1.0) * (*n / *d);
  } else if (std::regex_match(s, m, slash)) {
    auto n = plain_number(m[1].str());
    auto d = plain_number(m[2].str());
    if (n && d && *d != 0.0) value = *n / *d;
  } else {
    value = plain_number(s);
  }
  if (value && percent) *value /= 100.0;
  if (value && !std::isfinite(*value)) return std::nullopt;
  return value;
}

ExtractedAnswer classify_answer(std::string_view expr) {
  std::string s = unquote(strip_markup(expr));
  while (!s.empty() && (s.back() == '.' || s.back() == ';')) s.pop_back();
  s = std::string(text::trim(s));
  if (s.empty()) return ExtractedAnswer::none();
  if (auto v = parse_numeric(s)) return ExtractedAnswer::numeric(*v);
  static const std::regex letter(R"(^\(?([A-E])\)?$)");
  std::smatch m;
  if (std::regex_match(s, m, letter)) return ExtractedAnswer::letter(m[1].str()[0]);
  const std::string norm = text::to_lower(text::collapse_whitespace(s));
  if (norm == "proven") return ExtractedAnswer::proven();
  return ExtractedAnswer::text(norm);
}

std::optional<std::string> last_boxed(std::string_view text) {
  std::optional<std::string> found;
  const std::string_view tag = "\\boxed";
  for (std::size_t pos = text.find(tag); pos != std::string_view::npos; pos = text.find(tag, pos + 1)) {
    std::size_t open = pos + tag.size();
    while (open < text.size() && text[open] == ' ') ++open;
    if (open >= text.size() || text[open] != '{') continue;
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      if (text[i] == '}' && --depth == 0) {
        found = std::string(text.substr(open + 1, i - open - 1));
        break;
      }
    }
  }
  return found;
}

ExtractedAnswer extract_answer(std::string_view solution) {
  if (auto boxed = last_boxed(solution)) return classify_answer(*boxed);

  const auto lines = text::split_lines(solution);
  static const std::regex marker(R"((?:final answer|the answer is|answer\s*:)\s*(?:is\s*)?:?\s*(.*)$)",
                                 std::regex::icase);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::smatch m;
    if (std::regex_search(*it, m, marker)) {
      std::string rest = m[1].str();
      std::erase(rest, '*');
      const auto a = classify_answer(rest);
      if (a.kind != AnswerKind::None) return a;
    }
  }

  std::string last;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!text::trim(*it).empty()) {
      last = std::string(text::trim(*it));
      break;
    }
  }
  if (last.empty()) return ExtractedAnswer::none();
  static const std::regex lone_letter(R"(^\**\(?([A-E])\)?\.?\**$)");
  std::smatch m;
  if (std::regex_match(last, m, lone_letter)) return ExtractedAnswer::letter(m[1].str()[0]);

  const std::string lower = text::to_lower(last);
  static const std::regex proof_end(R"((\bproven\b|\bq\.?e\.?d\.?|\\blacksquare|\\square|∎)\W*$)");
  if (std::regex_search(lower, proof_end)) return ExtractedAnswer::proven();
  return ExtractedAnswer::none();
}

bool answers_agree(const ExtractedAnswer& a, const ExtractedAnswer& b, double tol) {
  if (a.kind == AnswerKind::None || b.kind == AnswerKind::None || a.kind != b.kind) return false;
  switch (a.kind) {
    case AnswerKind::Numeric: {
      const double x = *a.numeric_value, y = *b.numeric_value;
      return std::fabs(x - y) <= tol * std::max({1.0, std::fabs(x), std::fabs(y)});
    }
    case AnswerKind::Choice: return a.choice == b.choice;
    case AnswerKind::Text: return a.text_norm == b.text_norm;
    case AnswerKind::Proven: return true;
    case AnswerKind::None: return false;
  }
  return false;
}

nlohmann::json to_json(const ExtractedAnswer& a) {
  nlohmann::json j{{"kind", to_string(a.kind)}};
  if (a.numeric_value) j["numeric_value"] = *a.numeric_value;
  if (a.choice) j["choice"] = std::string(1, *a.choice);
  if (a.text_norm) j["text_norm"] = *a.text_norm;
  return j;
}

ExtractedAnswer answer_from_json(const nlohmann::json& j) {
  ExtractedAnswer a;
  a.kind = parse_answer_kind(j.at("kind").get<std::string>());
  if (j.contains("numeric_value")) a.numeric_value = j["numeric_value"].get<double>();
  if (j.contains("choice")) a.choice = j["choice"].get<std::string>().at(0);
  if (j.contains("text_norm")) a.text_norm = j["text_norm"].get<std::string>();
  return a;
}

nlohmann::json answer_value(const ExtractedAnswer& a) {
  switch (a.kind) {
    case AnswerKind::Numeric: return *a.numeric_value;
    case AnswerKind::Choice: return std::string(1, *a.choice);
    case AnswerKind::Text: return *a.text_norm;
    case AnswerKind::Proven: return "proven";
    case AnswerKind::None: return nullptr;
  }
  return nullptr;
}

}  // namespace figforge::synth
