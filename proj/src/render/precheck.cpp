#include "figforge/render/precheck.hpp"

#include "figforge/common/error.hpp"

namespace figforge::render {

std::vector<PrecheckRule> default_precheck_rules() {
  using D = Dialect;
  return {
      {D::Tikz, "tex-file-include",
       R"(\\(?:input|include|includegraphics|InputIfFileExists|lstinputlisting|verbatiminput|pgfimage|pgfdeclareimage|pgfplotstableread)\s*(?:\[[^\]]*\]\s*)*\{[^}]*\})"},
      {D::Tikz, "tex-bare-input", R"(\\input\s+[A-Za-z0-9_./~-])"},
      {D::Tikz, "tex-stream-read", R"(\\(?:openin|openout|immediate\s*\\write|write18)\b)"},
      {D::Tikz, "pgfplots-file-table", R"(\b(?:table|file)\s*(?:\[[^\]]*\]\s*)?\{[^}\s\\]+\.[A-Za-z0-9]+\})"},

      {D::PlotScript, "file-open", R"(\bopen\s*\()"},
      {D::PlotScript, "path-read", R"(\.(?:read_text|read_bytes|open)\s*\()"},
      {D::PlotScript, "tabular-read",
       R"(\b(?:read_csv|read_excel|read_json|read_table|read_parquet|read_pickle|read_sql|read_fwf|read_hdf|read_feather)\s*\()"},
      {D::PlotScript, "array-load", R"(\b(?:loadtxt|genfromtxt|fromfile|memmap|load)\s*\()"},
      {D::PlotScript, "image-load", R"(\b(?:imread|imageio)\b|\bImage\s*\.\s*open\b)"},
      {D::PlotScript, "network", R"(\b(?:urllib|urlopen|requests|http\.client|socket|ftplib)\b|https?://)"},
      {D::PlotScript, "process-or-fs", R"(\b(?:subprocess|shutil)\b|\bos\s*\.\s*(?:system|popen|listdir|walk|remove|unlink|chdir|scandir)\b)"},
  };
}

std::vector<PrecheckRule> precheck_rules_from_json(const nlohmann::json& j) {
  std::vector<PrecheckRule> rules;
  for (const auto& r : j) {
    rules.push_back(PrecheckRule{modelgate::parse_dialect(r.at("dialect").get<std::string>()),
                                 r.at("name").get<std::string>(), r.at("pattern").get<std::string>()});
  }
  return rules;
}

PrecheckTable::PrecheckTable() : PrecheckTable(default_precheck_rules()) {}

PrecheckTable::PrecheckTable(std::vector<PrecheckRule> rules) : rules_(std::move(rules)) {
  compiled_.reserve(rules_.size());
  for (const auto& r : rules_) {
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::ConfigInvalid, "precheck rule '" + r.name + "': " + e.what());
    }
  }
}

PrecheckResult PrecheckTable::check(const CodeSample& code) const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].dialect != code.dialect) continue;
    std::smatch m;
    if (std::regex_search(code.text, m, compiled_[i])) {
      return PrecheckResult{false, rules_[i].name + ": " + m.str()};
    }
  }
  return {};
}

PrecheckResult static_precheck(const CodeSample& code, const PrecheckTable& table) { return table.check(code); }

PrecheckResult static_precheck(const CodeSample& code) {
  static const PrecheckTable table;
  return table.check(code);
}

}  // namespace figforge::render
