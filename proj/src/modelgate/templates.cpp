#include "figforge/modelgate/templates.hpp"

#include <algorithm>

#include "figforge/common/error.hpp"

namespace figforge::modelgate {

namespace {

constexpr std::string_view kImg2TikzUser =
    "Please generate the corresponding TikZ code that accurately represents the visual elements "
    "in the image. TikZ is a powerful tool for creating vector graphics within LaTeX documents. "
    "Your generated code should be precise, well-structured, and should recreate the image as "
    "faithfully as possible.\n"
    "<image>";

constexpr std::string_view kImg2PlotUser =
    "Please provide the Python code needed to reproduce this image.\n"
    "<image>";

constexpr std::string_view kTikz2PlotSystem =
    "You are an expert in both LaTeX (specifically TiKZ) and Python (specifically Matplotlib).";

constexpr std::string_view kTikz2PlotUser =
    "Translate the provided TiKZ code into Python code using appropriate plotting libraries, such "
    "as Matplotlib. Pay close attention to the following requirements:\n"
    "\n"
    "1. **Avoid Overlapping**: Ensure that points, labels and text elements have different "
    "positions to avoid any overlap, enhancing readability.\n"
    "\n"
    "2. **LaTeX Formatting**: Accurately interpret and format any LaTeX equations or mathematical "
    "expressions to ensure they render correctly in the image.\n"
    "\n"
    "3. **Executable Code**: Ensure that the Python code is complete and can be executed directly "
    "without errors.\n"
    "\n"
    "Here's the TiKZ code:\n"
    "\n"
    "```latex\n"
    "[TiKZ Code]\n"
    "```\n"
    "\n"
    "Make sure to wrap your resulting Python code in the following format:\n"
    "\n"
    "```python\n"
    "[your python code here]\n"
    "```";

constexpr std::string_view kK12System =
    "You are an expert in mathematical problem-solving, LaTeX formatting, and structured data "
    "extraction. Please present all results in English and well-formatted LaTeX, converting HTML "
    "to LaTeX as needed. You will be provided with a JSON object containing the following fields: "
    "[\"question\", \"option_a\", \"option_b\", \"option_c\", \"option_d\", \"option_e\", "
    "\"answer1\", \"answer2\", \"parse\"].";

constexpr std::string_view kK12User =
    "Please process the provided JSON object by following these steps:\n"
    "\n"
    "1. **Translation:**\n"
    "    - Translate the math problem and any accompanying options into English.\n"
    "    - If the problem includes multiple-choice options, format them as a bulleted list.\n"
    "    - If no options are available, return an empty option list (`[]`).\n"
    "    - For problems with multiple sub-questions, separate each sub-question as an individual "
    "item in another list.\n"
    "\n"
    "2. **Step-by-Step Solution:**\n"
    "    - Provide a detailed, step-by-step solution to the problem, referencing \"answer1\", "
    "\"answer2\", and \"parse\".\n"
    "    - Adhere to the solution process provided by \"answer1\", \"answer2\", and \"parse\", as "
    "they are correct.\n"
    "\n"
    "3. **Short Answer:**\n"
    "    - Specify the answer(s) in a list format, where each item is a single word or phrase.\n"
    "    - Answer(s) should adhere to that provided by \"answer1\", \"answer2\", and \"parse\".\n"
    "    - For multiple-choice questions, return one of A, B, C, D, or E.\n"
    "    - For proof-based questions, return \"proven\".\n"
    "    - For problems with sub-questions, provide the answer for each sub-question in the same "
    "order as the sub-question list.\n"
    "\n"
    "**Input JSON:**\n"
    "\n"
    "```json\n"
    "[Raw Json Data]\n"
    "```";

constexpr std::string_view kQuestionSynthUser =
    "Please create a **math reasoning question** for a K-12 audience based on the image generated "
    "by the following {} code. The question must adhere to these criteria:\n"
    "\n"
    "1. **Image Engaging**: The question must utilize visible patterns, shapes, numbers, or other "
    "elements present in the image to engage reasoning skills.\n"
    "\n"
    "2. **Single Question**: Write a single, standalone question. The question should be concise "
    "and self-contained, without any subparts. You do not need to provide an answer to the "
    "question.\n"
    "\n"
    "3. **Self-Sufficiency**: The recipient will only see the image, not the code. Include any "
    "essential details from the code (e.g., coordinates, hidden axes, specific data points, or "
    "labels) that are necessary for solving the question but may not be visible in the image.\n"
    "\n"
    "4. **Solvability**: Ensure the question can be solved using only the visible information in "
    "the image and the question text.\n"
    "\n"
    "Below is the {} code that generates the image:\n"
    "\n"
    "```python/tikz\n"
    "[Image Code]\n"
    "```\n"
    "\n"
    "### Question:";

// No published figure exists for the solver prompt; this one hands the solver
// the question plus the figure's code and asks for a boxed final answer so the
// consistency gate can extract it.
constexpr std::string_view kSolveSystem =
    "You are an expert in mathematical problem-solving for K-12 students.";

constexpr std::string_view kSolveUser =
    "Solve the following math problem step by step. The figure it refers to is generated by the "
    "[Code Language] code shown below.\n"
    "\n"
    "### Question:\n"
    "[Question]\n"
    "\n"
    "### Figure Code:\n"
    "```[Code Fence]\n"
    "[Image Code]\n"
    "```\n"
    "\n"
    "Show your reasoning, then give the final answer in the form \\boxed{answer}. For "
    "multiple-choice questions, box the option letter. For proof-based questions, box \"proven\".";

constexpr std::string_view kTikzResponse =
    "The image can be generated using the following TikZ code:\n"
    "```tikz\n"
    "[code]\n"
    "```";

constexpr std::string_view kPlotResponse =
    "The image can be generated using the following Python code:\n"
    "```python\n"
    "[code]\n"
    "```";

const std::vector<PromptTemplate>& registry() {
  static const std::vector<PromptTemplate> templates{
      {TemplateId::Img2Tikz, "", kImg2TikzUser, {}},
      {TemplateId::Img2Plot, "", kImg2PlotUser, {}},
      {TemplateId::Tikz2Plot, kTikz2PlotSystem, kTikz2PlotUser, {{"code", "[TiKZ Code]"}}},
      {TemplateId::K12Process, kK12System, kK12User, {{"problem_json", "[Raw Json Data]"}}},
      {TemplateId::QuestionSynth, "", kQuestionSynthUser,
       {{"dialect_name", "{}"}, {"fence", "python/tikz"}, {"code", "[Image Code]"}}},
      {TemplateId::Solve, kSolveSystem, kSolveUser,
       {{"dialect_name", "[Code Language]"},
        {"fence", "[Code Fence]"},
        {"question", "[Question]"},
        {"code", "[Image Code]"}}},
  };
  return templates;
}

std::string fill(std::string_view text, const std::vector<Slot>& slots,
                 const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    // Earliest marker wins; on a tie the longer marker wins.
    std::size_t best_at = std::string_view::npos;
    const Slot* best = nullptr;
    for (const Slot& s : slots) {
      const std::size_t at = text.find(s.marker, pos);
      if (at == std::string_view::npos) continue;
      if (at < best_at || (at == best_at && s.marker.size() > best->marker.size())) {
        best_at = at;
        best = &s;
      }
    }
    if (!best) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, best_at - pos));
    out.append(values.at(std::string(best->name)));
    pos = best_at + best->marker.size();
  }
  return out;
}

}  // namespace

const PromptTemplate& prompt_template(TemplateId id) {
  for (const auto& t : registry()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::UnknownTemplate, "no template registered for id");
}

const std::vector<TemplateId>& all_templates() {
  static const std::vector<TemplateId> ids{TemplateId::Img2Tikz,   TemplateId::Img2Plot,
                                           TemplateId::Tikz2Plot,  TemplateId::K12Process,
                                           TemplateId::QuestionSynth, TemplateId::Solve};
  return ids;
}

RenderedPrompt render_prompt(TemplateId id, const std::map<std::string, std::string>& slots) {
  const PromptTemplate& t = prompt_template(id);
  for (const Slot& s : t.slots) {
    if (!slots.count(std::string(s.name))) {
      throw Error(ErrorCode::MissingSlot,
                  std::string(to_string(id)) + " needs slot '" + std::string(s.name) + "'");
    }
  }
  return RenderedPrompt{fill(t.system_text, t.slots, slots), fill(t.user_text, t.slots, slots)};
}

std::string_view response_template(Dialect dialect) {
  return dialect == Dialect::Tikz ? kTikzResponse : kPlotResponse;
}

namespace {
constexpr std::string_view kCodeMarker = "[code]";

std::pair<std::string_view, std::string_view> response_parts(Dialect dialect) {
  const std::string_view t = response_template(dialect);
  const std::size_t at = t.find(kCodeMarker);
  return {t.substr(0, at), t.substr(at + kCodeMarker.size())};
}
}  // namespace

std::string format_response(Dialect dialect, std::string_view code) {
  const auto [head, tail] = response_parts(dialect);
  std::string out;
  out.reserve(head.size() + code.size() + tail.size());
  out.append(head).append(code).append(tail);
  return out;
}

std::optional<std::string> parse_response(Dialect dialect, std::string_view text) {
  const auto [head, tail] = response_parts(dialect);
  if (text.size() < head.size() + tail.size()) return std::nullopt;
  if (text.substr(0, head.size()) != head) return std::nullopt;
  if (text.substr(text.size() - tail.size()) != tail) return std::nullopt;
  return std::string(text.substr(head.size(), text.size() - head.size() - tail.size()));
}

}  // namespace figforge::modelgate
