#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "figforge/common/fileio.hpp"
#include "figforge/corpus/asset.hpp"
#include "figforge/k12/pipeline.hpp"
#include "figforge/modelgate/gateway.hpp"
#include "support.hpp"

namespace testsupport {

inline nlohmann::json k12_fixtures(const std::filesystem::path& golden_dir) {
  return nlohmann::json::parse(figforge::read_text_file(golden_dir / "k12" / "fixtures.json"));
}

// Ids starting with "eq" resolve to a 300x24 equation line, everything else to
// a 600x400 figure. Digests derive from the id.
inline figforge::k12::AssetLookup synthetic_lookup() {
  return [](const std::string& id) -> std::optional<figforge::corpus::ImageAsset> {
    if (id.rfind("missing", 0) == 0) return std::nullopt;
    figforge::corpus::ImageAsset a;
    a.asset_id = id;
    a.source = figforge::corpus::SourceTag::K12;
    const bool eq = id.rfind("eq", 0) == 0;
    a.width_px = eq ? 300 : 600;
    a.height_px = eq ? 24 : 400;
    a.digest = figforge::sha256(id);
    a.storage_ref = "/nonexistent/" + id;
    return a;
  };
}

// Runs one fixture case through the full per-problem path with a stub that
// returns the case's response for every K12 request.
inline figforge::k12::ProblemOutcome run_k12_case(const nlohmann::json& c) {
  auto stub = std::make_shared<figforge::modelgate::StubEndpoint>();
  stub->add_rule({figforge::modelgate::TemplateId::K12Process, "", c.at("response").get<std::string>(), 0});
  auto gw = stub_gateway(stub);
  figforge::k12::StubOcr ocr;
  figforge::k12::PipelineOptions opts;
  opts.augment.endpoint_id = "default";
  return figforge::k12::process_problem(figforge::k12::raw_problem_from_json(c.at("problem")), synthetic_lookup(),
                                        ocr, *gw, opts);
}

}  // namespace testsupport
