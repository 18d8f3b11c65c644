#include "figforge/k12/pipeline.hpp"

#include <regex>

#include "figforge/common/error.hpp"
#include "figforge/common/parallel.hpp"
#include "figforge/common/text.hpp"

namespace figforge::k12 {

using filters::FilterVerdict;
using filters::RejectReason;

AssetLookup catalog_lookup(const corpus::Catalog& catalog) {
  return [&catalog](const std::string& id) { return catalog.find(id); };
}

ImagePartition partition_problem_images(const RawProblem& problem, const AssetLookup& lookup,
                                        const corpus::ClassifyConfig& cfg) {
  ImagePartition part;
  for (const auto& ref : problem.image_refs) {
    auto asset = lookup(ref);
    if (!asset) throw Error(ErrorCode::MissingAsset, "problem " + problem.problem_id + " references unknown " + ref);
    if (corpus::classify_asset(*asset, cfg) == corpus::AssetKind::Equation) {
      part.equations.push_back(std::move(*asset));
    } else {
      part.figures.push_back(std::move(*asset));
    }
  }
  return part;
}

FilterVerdict admit_problem(const ImagePartition& partition) {
  if (partition.figures.empty()) {
    return FilterVerdict::reject(RejectReason::EquationOnly,
                                 std::to_string(partition.equations.size()) + " equation image(s), no figure");
  }
  return FilterVerdict::pass();
}

namespace {

// Lowercased line with markdown emphasis and heading marks removed.
std::string plain(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c != '*' && c != '#' && c != '_') out.push_back(c);
  }
  return text::to_lower(text::trim(out));
}

// "2. **Step-by-Step Solution:** rest" -> section 2 with inline rest.
std::optional<std::pair<int, std::string>> section_header(std::string_view line, int expected) {
  static const char* const kNames[][2] = {{"translation", nullptr},
                                          {"step-by-step solution", "solution"},
                                          {"short answer", "answer"}};
  const std::string p = plain(line);
  if (p.size() < 2 || p[0] != static_cast<char>('0' + expected) || (p[1] != '.' && p[1] != ')')) return std::nullopt;
  const std::string rest = std::string(text::trim(std::string_view(p).substr(2)));
  for (const char* name : kNames[expected - 1]) {
    if (name && rest.rfind(name, 0) == 0) {
      std::string tail = rest.substr(std::string_view(name).size());
      // Recover original casing for inline content after the header.
      const std::size_t colon = line.find(':');
      std::string inline_rest = colon == std::string_view::npos ? std::string() : std::string(line.substr(colon + 1));
      std::size_t k = inline_rest.find_first_not_of(" *");
      inline_rest = k == std::string::npos ? std::string() : inline_rest.substr(k);
      if (tail.empty() || tail[0] == ':' || tail[0] == ' ') return std::make_pair(expected, inline_rest);
    }
  }
  return std::nullopt;
}

bool strip_bullet(std::string& s) {
  static const std::regex bullet(R"(^\s*(?:[-*•]|\(?\d+[.)]|\(?[ivx]+\))\s+)");
  std::smatch m;
  if (std::regex_search(s, m, bullet)) {
    s = s.substr(m[0].length());
    return true;
  }
  return false;
}

std::string unquote(std::string s) {
  s = std::string(text::trim(s));
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'') ||
                           (s.front() == '`' && s.back() == '`'))) {
    s = std::string(text::trim(std::string_view(s).substr(1, s.size() - 2)));
  }
  return s;
}

void parse_translation(const std::vector<std::string>& lines, ProcessedProblem& p) {
  static const std::regex option_line(R"(^\s*(?:[-*]\s*)?\(?([A-Ea-e])[.):]\s+(.*)$)");
  enum class Mode { Question, Options, Sub } mode = Mode::Question;
  std::vector<std::string> question;
  for (const auto& raw : lines) {
    const std::string trimmed(text::trim(raw));
    if (trimmed.empty()) continue;
    const std::string lower = plain(trimmed);
    const std::string label = lower.rfind("- ", 0) == 0 ? lower.substr(2) : lower;
    if (label.rfind("options", 0) == 0) {
      mode = Mode::Options;
      const std::size_t colon = trimmed.find(':');
      const std::string rest = colon == std::string::npos ? "" : unquote(trimmed.substr(colon + 1));
      if (rest == "[]" || rest == "`[]`" || text::iequals(rest, "none")) mode = Mode::Question;
      continue;
    }
    if (label.rfind("sub-questions", 0) == 0 || label.rfind("sub questions", 0) == 0 ||
        label.rfind("subquestions", 0) == 0) {
      mode = Mode::Sub;
      continue;
    }
    if (label.rfind("question:", 0) == 0 || label.rfind("problem:", 0) == 0) {
      question.push_back(std::string(text::trim(trimmed.substr(trimmed.find(':') + 1))));
      mode = Mode::Question;
      continue;
    }
    std::smatch m;
    if (mode != Mode::Sub && std::regex_match(trimmed, m, option_line) &&
        (mode == Mode::Options || trimmed[0] == '-' || trimmed[0] == '*')) {
      p.options.push_back(std::string(text::trim(m[2].str())));
      continue;
    }
    if (mode == Mode::Sub) {
      std::string item = trimmed;
      strip_bullet(item);
      p.sub_questions.push_back(item);
      continue;
    }
    question.push_back(trimmed);
  }
  p.question_en = text::join(question, "\n");
}

std::vector<std::string> parse_short_answers(const std::vector<std::string>& lines) {
  std::vector<std::string> body;
  for (const auto& l : lines) {
    if (!text::trim(l).empty()) body.emplace_back(text::trim(l));
  }
  std::vector<std::string> out;
  if (body.empty()) return out;
  const std::string joined = text::join(body, " ");
  if (joined.front() == '[') {
    auto j = nlohmann::json::parse(joined, nullptr, false);
    if (!j.is_discarded() && j.is_array()) {
      for (const auto& v : j) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      return out;
    }
    const std::size_t close = joined.rfind(']');
    std::string inner = joined.substr(1, close == std::string::npos ? std::string::npos : close - 1);
    std::size_t start = 0;
    while (start <= inner.size()) {
      std::size_t comma = inner.find(',', start);
      if (comma == std::string::npos) comma = inner.size();
      std::string item = unquote(inner.substr(start, comma - start));
      if (!item.empty()) out.push_back(item);
      start = comma + 1;
    }
    return out;
  }
  for (auto line : body) {
    strip_bullet(line);
    line = unquote(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

ProcessedProblem parse_processed(const std::string& response, const std::string& problem_id) {
  std::vector<std::string> sections[3];
  int current = 0;
  for (const auto& line : text::split_lines(response)) {
    if (current < 3) {
      if (auto h = section_header(line, current + 1)) {
        current = h->first;
        if (!h->second.empty()) sections[current - 1].push_back(h->second);
        continue;
      }
    }
    if (current > 0) sections[current - 1].push_back(line);
  }
  static const char* const kMissing[] = {"translation", "step-by-step solution", "short answer"};
  if (current < 3) throw Error(ErrorCode::SchemaInvalid, std::string("missing section: ") + kMissing[current]);

  ProcessedProblem p;
  p.problem_id = problem_id;
  parse_translation(sections[0], p);
  p.solution_cot = std::string(text::trim(text::join(sections[1], "\n")));
  p.short_answers = parse_short_answers(sections[2]);
  if (!p.options.empty()) {
    static const std::regex letter(R"(^\(?([A-Ea-e])\)?\.?$)");
    for (auto& a : p.short_answers) {
      std::smatch m;
      if (std::regex_match(a, m, letter)) a = std::string(1, static_cast<char>(std::toupper(m[1].str()[0])));
    }
  }
  return p;
}

FilterVerdict validate_processed(const ProcessedProblem& p) {
  auto invalid = [](std::string why) { return FilterVerdict::reject(RejectReason::SchemaInvalid, std::move(why)); };
  if (p.figure_refs.empty()) return FilterVerdict::reject(RejectReason::EquationOnly, "no figure");
  if (text::trim(p.question_en).empty()) return invalid("empty translation");
  if (text::trim(p.solution_cot).empty()) return invalid("empty solution");
  if (p.short_answers.empty()) return invalid("no short answer");
  if (!p.sub_questions.empty() && p.short_answers.size() != p.sub_questions.size()) {
    return invalid(std::to_string(p.short_answers.size()) + " answer(s) for " + std::to_string(p.sub_questions.size()) +
                   " sub-question(s)");
  }
  for (const auto& a : p.short_answers) {
    if (text::trim(a).empty() || a.find('\n') != std::string::npos || text::utf8_length(a) > 100) {
      return invalid("answer is not a single word or phrase: " + a.substr(0, 40));
    }
  }
  if (!p.options.empty() && p.sub_questions.empty()) {
    const char last = static_cast<char>('A' + std::min<std::size_t>(p.options.size(), 5) - 1);
    for (const auto& a : p.short_answers) {
      if (a == "proven") continue;
      if (a.size() != 1 || a[0] < 'A' || a[0] > last) {
        return invalid("multiple-choice answer '" + a + "' is not one of A-" + std::string(1, last));
      }
    }
  }
  return FilterVerdict::pass();
}

ProcessedProblem augment(const RawProblem& problem, const std::vector<std::string>& figure_refs,
                         modelgate::ModelGateway& gateway, const AugmentOptions& opts) {
  modelgate::GenerationRequest req;
  req.template_id = modelgate::TemplateId::K12Process;
  req.slots["problem_json"] = prompt_payload(problem).dump(2);
  req.temperature = opts.temperature;
  req.endpoint_id = opts.endpoint_id;

  std::string last_reason = "no attempt";
  for (std::uint32_t attempt = 0; attempt < std::max<std::uint32_t>(1, opts.attempts); ++attempt) {
    const auto result = gateway.complete(req);
    try {
      ProcessedProblem p = parse_processed(result.raw_text, problem.problem_id);
      p.figure_refs = figure_refs;
      const FilterVerdict v = validate_processed(p);
      if (v.passed()) return p;
      last_reason = v.detail;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SchemaInvalid) throw;
      last_reason = e.what();
    }
  }
  throw Error(ErrorCode::SchemaInvalid, problem.problem_id + ": " + last_reason);
}

ProblemOutcome process_problem(const RawProblem& problem, const AssetLookup& lookup, OcrClient& ocr,
                               modelgate::ModelGateway& gateway, const PipelineOptions& opts) {
  ProblemOutcome out;
  out.problem_id = problem.problem_id;
  ImagePartition part;
  try {
    part = partition_problem_images(problem, lookup, opts.classify);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingAsset) throw;
    out.verdict = FilterVerdict::reject(RejectReason::SchemaInvalid, e.what());
    return out;
  }
  out.figures = part.figures.size();
  out.equations = part.equations.size();
  out.verdict = admit_problem(part);
  if (!out.verdict.passed()) return out;

  const SplicedText spliced = splice_equations(problem.question, part.equations, ocr_equations(part.equations, ocr));
  RawProblem ready = problem;
  ready.question = spliced.text;
  std::vector<std::string> figure_refs;
  for (const auto& f : part.figures) figure_refs.push_back(f.asset_id);
  try {
    ProcessedProblem p = augment(ready, figure_refs, gateway, opts.augment);
    p.ocr_flagged = spliced.flagged;
    out.processed = std::move(p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaInvalid) throw;
    out.verdict = FilterVerdict::reject(RejectReason::SchemaInvalid, e.what());
  }
  return out;
}

std::vector<ProblemOutcome> process_problems(const std::vector<RawProblem>& problems, const AssetLookup& lookup,
                                             OcrClient& ocr, modelgate::ModelGateway& gateway,
                                             const PipelineOptions& opts) {
  std::vector<ProblemOutcome> out(problems.size());
  parallel_for(problems.size(), opts.workers,
               [&](std::size_t i) { out[i] = process_problem(problems[i], lookup, ocr, gateway, opts); });
  return out;
}

}  // namespace figforge::k12
