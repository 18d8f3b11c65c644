#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "figforge/common/digest.hpp"
#include "figforge/common/text.hpp"
#include "figforge/modelgate/endpoint.hpp"
#include "figforge/modelgate/extract.hpp"

namespace figforge::modelgate {

namespace {

struct Triangle {
  int leg_a;
  int leg_b;
  int rotation_deg;
};

int hex_byte(const std::string& hex, std::size_t i) { return std::stoi(hex.substr(2 * i, 2), nullptr, 16); }

Triangle triangle_from_digest(const ContentDigest& d) {
  return Triangle{3 + hex_byte(d.hex, 0) % 7, 3 + hex_byte(d.hex, 1) % 7,
                  (hex_byte(d.hex, 2) * 256 + hex_byte(d.hex, 3)) % 360};
}

std::string tikz_for(const Triangle& t) {
  std::ostringstream os;
  os << "\\begin{tikzpicture}\n"
     << "% right triangle with legs " << t.leg_a << " and " << t.leg_b << "\n"
     << "\\draw[thick, rotate=" << t.rotation_deg << "] (0,0) -- (" << t.leg_a << ",0) -- (0,"
     << t.leg_b << ") -- cycle;\n"
     << "\\draw[rotate=" << t.rotation_deg << "] (0.3,0) -- (0.3,0.3) -- (0,0.3);\n"
     << "\\end{tikzpicture}";
  return os.str();
}

std::string python_for(const Triangle& t) {
  std::ostringstream os;
  os << "import math\n"
     << "import matplotlib.pyplot as plt\n"
     << "\n"
     << "# right triangle with legs " << t.leg_a << " and " << t.leg_b << "\n"
     << "theta = math.radians(" << t.rotation_deg << ")\n"
     << "pts = [(0, 0), (" << t.leg_a << ", 0), (0, " << t.leg_b << "), (0, 0)]\n"
     << "xs = [x * math.cos(theta) - y * math.sin(theta) for x, y in pts]\n"
     << "ys = [x * math.sin(theta) + y * math.cos(theta) for x, y in pts]\n"
     << "fig, ax = plt.subplots(figsize=(4, 4))\n"
     << "ax.plot(xs, ys, color=\"black\", linewidth=2)\n"
     << "ax.set_aspect(\"equal\")\n"
     << "ax.axis(\"off\")\n"
     << "plt.savefig(\"triangle.png\", dpi=100)";
  return os.str();
}

std::optional<Triangle> triangle_in(const std::string& text) {
  static const std::regex legs(R"(legs (\d+) and (\d+))");
  static const std::regex rot(R"(rotate=(\d+)|math\.radians\((\d+)\))");
  std::smatch m;
  if (!std::regex_search(text, m, legs)) return std::nullopt;
  Triangle t{std::stoi(m[1]), std::stoi(m[2]), 0};
  if (std::regex_search(text, m, rot)) t.rotation_deg = std::stoi(m[1].matched ? m[1].str() : m[2].str());
  return t;
}

std::string format_number(double v) {
  if (std::abs(v - std::round(v)) < 1e-12) return std::to_string(static_cast<long long>(std::llround(v)));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string code_section(const ChatRequest& req) {
  const std::string_view u = req.user_text;
  const std::size_t open = u.find("```");
  if (open == std::string_view::npos) return req.user_text;
  const std::size_t body = u.find('\n', open);
  const std::size_t close = u.find("\n```", body);
  if (body == std::string_view::npos || close == std::string_view::npos) return req.user_text;
  return std::string(u.substr(body + 1, close - body - 1));
}

std::string k12_response(const ChatRequest& req) {
  const auto problem = nlohmann::json::parse(code_section(req), nullptr, false);
  if (problem.is_discarded() || !problem.is_object()) return "I could not read the problem.";
  std::ostringstream os;
  os << "1. **Translation:**\n" << problem.value("question", "") << "\n";
  std::vector<std::string> options;
  for (const char* key : {"option_a", "option_b", "option_c", "option_d", "option_e"}) {
    const auto it = problem.find(key);
    if (it != problem.end() && it->is_string() && !it->get<std::string>().empty()) {
      options.push_back(it->get<std::string>());
    }
  }
  if (options.empty()) {
    os << "Options: []\n";
  } else {
    os << "Options:\n";
    for (std::size_t i = 0; i < options.size(); ++i) {
      os << "- " << static_cast<char>('A' + i) << ". " << options[i] << "\n";
    }
  }
  os << "\n2. **Step-by-Step Solution:**\n";
  const std::string parse = problem.value("parse", "");
  os << (parse.empty() ? "Step 1: Apply the given conditions to reach the answer." : parse) << "\n";
  std::string answer = std::string(text::trim(problem.value("answer1", "")));
  if (answer.empty()) answer = "proven";
  os << "\n3. **Short Answer:**\n" << nlohmann::json::array({answer}).dump() << "\n";
  return os.str();
}

}  // namespace

std::string default_stub_response(const ChatRequest& req) {
  switch (req.template_id) {
    case TemplateId::Img2Tikz:
    case TemplateId::Img2Plot: {
      ContentDigest d = req.image ? sha256(req.image->bytes) : sha256(req.user_text);
      // Sampling above zero temperature draws a different, still reproducible figure.
      if (req.temperature > 0.0) d = sha256(d.hex + "|t=" + format_number(req.temperature));
      const Triangle t = triangle_from_digest(d);
      if (req.template_id == TemplateId::Img2Tikz) {
        return "The image can be generated using the following TikZ code:\n```tikz\n" + tikz_for(t) + "\n```";
      }
      return "The image can be generated using the following Python code:\n```python\n" + python_for(t) +
             "\n```";
    }
    case TemplateId::Tikz2Plot: {
      const std::string code = code_section(req);
      const Triangle t = triangle_in(code).value_or(triangle_from_digest(sha256(code)));
      return "```python\n" + python_for(t) + "\n```";
    }
    case TemplateId::QuestionSynth: {
      const std::string code = code_section(req);
      if (const auto t = triangle_in(code)) {
        return "A right triangle has legs of length " + std::to_string(t->leg_a) + " and " +
               std::to_string(t->leg_b) + ", as shown in the figure. What is the length of its hypotenuse?";
      }
      return "How many line segments are drawn in the figure?";
    }
    case TemplateId::Solve: {
      static const std::regex legs(R"(legs of length (\d+) and (\d+))");
      std::smatch m;
      if (std::regex_search(req.user_text, m, legs)) {
        const int a = std::stoi(m[1]);
        const int b = std::stoi(m[2]);
        const std::string h = format_number(std::sqrt(static_cast<double>(a * a + b * b)));
        return "By the Pythagorean theorem the hypotenuse is sqrt(" + std::to_string(a) + "^2 + " +
               std::to_string(b) + "^2) = " + h + ".\n\nThe answer is \\boxed{" + h + "}.";
      }
      return "Counting the segments in the figure gives 3.\n\n\\boxed{3}";
    }
    case TemplateId::K12Process:
      return k12_response(req);
  }
  return "";
}

}  // namespace figforge::modelgate
