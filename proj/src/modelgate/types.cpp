#include "figforge/modelgate/types.hpp"

#include "figforge/common/error.hpp"

namespace figforge::modelgate {

std::string_view to_string(Dialect d) { return d == Dialect::Tikz ? "TIKZ" : "PLOTSCRIPT"; }

Dialect parse_dialect(std::string_view name) {
  if (name == "TIKZ") return Dialect::Tikz;
  if (name == "PLOTSCRIPT") return Dialect::PlotScript;
  throw Error(ErrorCode::ConfigInvalid, "unknown dialect '" + std::string(name) + "'");
}

std::string_view display_name(Dialect d) { return d == Dialect::Tikz ? "TikZ" : "Python"; }

std::string_view fence_label(Dialect d) { return d == Dialect::Tikz ? "tikz" : "python"; }

CodeSample make_code_sample(Dialect dialect, std::string text, Provenance provenance) {
  if (text.empty()) throw Error(ErrorCode::PreconditionViolation, "code sample text is empty");
  std::string key;
  key.append(to_string(dialect)).append("\x1f");
  key.append(provenance.seed_asset_id).append("\x1f");
  key.append(std::to_string(provenance.round_index)).append("\x1f");
  key.append(provenance.parent_code_id).append("\x1f");
  key.append(text);
  CodeSample s;
  s.code_id = "code-" + sha256(key).prefix(20);
  s.dialect = dialect;
  s.text = std::move(text);
  s.provenance = std::move(provenance);
  return s;
}

nlohmann::json to_json(const CodeSample& code) {
  nlohmann::json prov{
      {"seed_asset_id", code.provenance.seed_asset_id},
      {"round_index", code.provenance.round_index},
      {"endpoint_id", code.provenance.endpoint_id},
      {"temperature", code.provenance.temperature},
  };
  if (!code.provenance.parent_code_id.empty()) prov["parent_code_id"] = code.provenance.parent_code_id;
  return nlohmann::json{{"code_id", code.code_id},
                        {"dialect", to_string(code.dialect)},
                        {"text", code.text},
                        {"provenance", std::move(prov)}};
}

CodeSample code_sample_from_json(const nlohmann::json& j) {
  CodeSample s;
  s.code_id = j.at("code_id").get<std::string>();
  s.dialect = parse_dialect(j.at("dialect").get<std::string>());
  s.text = j.at("text").get<std::string>();
  const auto& p = j.at("provenance");
  s.provenance.seed_asset_id = p.at("seed_asset_id").get<std::string>();
  s.provenance.round_index = p.at("round_index").get<std::uint32_t>();
  s.provenance.endpoint_id = p.at("endpoint_id").get<std::string>();
  s.provenance.temperature = p.at("temperature").get<double>();
  s.provenance.parent_code_id = p.value("parent_code_id", "");
  return s;
}

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::Img2Tikz: return "IMG2TIKZ";
    case TemplateId::Img2Plot: return "IMG2PLOT";
    case TemplateId::Tikz2Plot: return "TIKZ2PLOT";
    case TemplateId::K12Process: return "K12_PROCESS";
    case TemplateId::QuestionSynth: return "QUESTION_SYNTH";
    case TemplateId::Solve: return "SOLVE";
  }
  return "UNKNOWN";
}

TemplateId parse_template_id(std::string_view name) {
  for (TemplateId id : {TemplateId::Img2Tikz, TemplateId::Img2Plot, TemplateId::Tikz2Plot,
                        TemplateId::K12Process, TemplateId::QuestionSynth, TemplateId::Solve}) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorCode::UnknownTemplate, "unknown template '" + std::string(name) + "'");
}

}  // namespace figforge::modelgate
