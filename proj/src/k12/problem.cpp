#include "figforge/k12/problem.hpp"

#include <regex>

#include "figforge/common/digest.hpp"
#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"

namespace figforge::k12 {

namespace {

const char* const kOptionKeys[] = {"option_a", "option_b", "option_c", "option_d", "option_e"};

std::optional<std::string>* option_slot(RawProblem& p, int i) {
  std::optional<std::string>* slots[] = {&p.option_a, &p.option_b, &p.option_c, &p.option_d, &p.option_e};
  return slots[i];
}

const std::optional<std::string>& option_at(const RawProblem& p, int i) {
  const std::optional<std::string>* slots[] = {&p.option_a, &p.option_b, &p.option_c, &p.option_d, &p.option_e};
  return *slots[i];
}

// Source data sometimes carries numbers where text is expected.
std::string text_field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

}  // namespace

std::vector<std::string> img_sources(const std::string& markup) {
  static const std::regex img(R"(<img\b[^>]*?\bsrc\s*=\s*["']?([^"'\s>]+)["']?[^>]*>)", std::regex::icase);
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(markup.begin(), markup.end(), img); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

RawProblem raw_problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaInvalid, "problem is not a JSON object");
  if (!j.contains("question")) throw Error(ErrorCode::SchemaInvalid, "problem has no question");
  RawProblem p;
  p.question = text_field(j, "question");
  for (int i = 0; i < 5; ++i) {
    auto it = j.find(kOptionKeys[i]);
    if (it != j.end() && !it->is_null()) *option_slot(p, i) = text_field(j, kOptionKeys[i]);
  }
  p.answer1 = text_field(j, "answer1");
  p.answer2 = text_field(j, "answer2");
  p.parse = text_field(j, "parse");
  if (j.contains("image_refs")) {
    p.image_refs = j.at("image_refs").get<std::vector<std::string>>();
  } else {
    p.image_refs = img_sources(p.question);
  }
  p.problem_id = j.contains("problem_id") ? text_field(j, "problem_id") : "prob-" + sha256(prompt_payload(p).dump()).prefix(20);
  return p;
}

nlohmann::ordered_json prompt_payload(const RawProblem& p) {
  nlohmann::ordered_json j;
  j["question"] = p.question;
  for (int i = 0; i < 5; ++i) j[kOptionKeys[i]] = option_at(p, i).value_or("");
  j["answer1"] = p.answer1;
  j["answer2"] = p.answer2;
  j["parse"] = p.parse;
  return j;
}

nlohmann::json to_json(const RawProblem& p) {
  nlohmann::json j{{"problem_id", p.problem_id}, {"question", p.question}, {"answer1", p.answer1},
                   {"answer2", p.answer2},       {"parse", p.parse},       {"image_refs", p.image_refs}};
  for (int i = 0; i < 5; ++i) {
    j[kOptionKeys[i]] = option_at(p, i) ? nlohmann::json(*option_at(p, i)) : nlohmann::json(nullptr);
  }
  return j;
}

std::vector<std::string> present_options(const RawProblem& p) {
  std::vector<std::string> out;
  for (int i = 0; i < 5; ++i) {
    if (option_at(p, i) && !option_at(p, i)->empty()) out.push_back(*option_at(p, i));
  }
  return out;
}

nlohmann::json to_json(const ProcessedProblem& p) {
  return {{"problem_id", p.problem_id},     {"question_en", p.question_en},   {"options", p.options},
          {"sub_questions", p.sub_questions}, {"solution_cot", p.solution_cot}, {"short_answers", p.short_answers},
          {"figure_refs", p.figure_refs},   {"ocr_flagged", p.ocr_flagged}};
}

ProcessedProblem processed_from_json(const nlohmann::json& j) {
  ProcessedProblem p;
  p.problem_id = j.at("problem_id").get<std::string>();
  p.question_en = j.at("question_en").get<std::string>();
  p.options = j.at("options").get<std::vector<std::string>>();
  p.sub_questions = j.at("sub_questions").get<std::vector<std::string>>();
  p.solution_cot = j.at("solution_cot").get<std::string>();
  p.short_answers = j.at("short_answers").get<std::vector<std::string>>();
  p.figure_refs = j.at("figure_refs").get<std::vector<std::string>>();
  p.ocr_flagged = j.value("ocr_flagged", false);
  return p;
}

std::vector<RawProblem> load_raw_problems(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoFailure, "problem file not found: " + path.string());
  std::vector<RawProblem> out;
  std::size_t line_no = 0;
  for_each_line(
      path,
      [&](std::string_view line) {
        ++line_no;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
          throw Error(ErrorCode::SchemaInvalid, path.string() + ":" + std::to_string(line_no) + ": not JSON");
        }
        out.push_back(raw_problem_from_json(j));
      },
      true);
  return out;
}

}  // namespace figforge::k12
