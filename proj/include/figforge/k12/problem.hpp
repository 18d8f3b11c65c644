#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace figforge::k12 {

// Field names follow the input JSON contract verbatim.
struct RawProblem {
  std::string problem_id;
  std::string question;
  std::optional<std::string> option_a, option_b, option_c, option_d, option_e;
  std::string answer1, answer2, parse;
  std::vector<std::string> image_refs;  // ImageAsset ids

  bool operator==(const RawProblem&) const = default;
};

struct ProcessedProblem {
  std::string problem_id;
  std::string question_en;
  std::vector<std::string> options;  // may be empty
  std::vector<std::string> sub_questions;
  std::string solution_cot;
  std::vector<std::string> short_answers;
  std::vector<std::string> figure_refs;
  bool ocr_flagged = false;  // an equation could not be recognized

  bool operator==(const ProcessedProblem&) const = default;
};

/// Missing problem_id is derived from the content; missing image_refs are
/// taken from <img src="..."> tokens in the question, in order.
RawProblem raw_problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RawProblem& p);
/// Exactly the nine fields the augmentation prompt describes, in that order.
nlohmann::ordered_json prompt_payload(const RawProblem& p);
std::vector<std::string> present_options(const RawProblem& p);

nlohmann::json to_json(const ProcessedProblem& p);
ProcessedProblem processed_from_json(const nlohmann::json& j);

/// Throws Error(IoFailure) if unreadable, Error(SchemaInvalid) on a bad line.
std::vector<RawProblem> load_raw_problems(const std::filesystem::path& path);

/// src attribute values of <img> tags, in order of appearance.
std::vector<std::string> img_sources(const std::string& markup);

}  // namespace figforge::k12
