#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/corpus/asset.hpp"
#include "figforge/filters/filters.hpp"
#include "figforge/k12/ocr.hpp"
#include "figforge/modelgate/gateway.hpp"
#include "figforge/pairs/pairs.hpp"
#include "figforge/render/precheck.hpp"
#include "figforge/render/renderer.hpp"

namespace figforge::orchestrator {

namespace fs = std::filesystem;
using modelgate::Dialect;

struct Paths {
  fs::path catalog = "state/catalog.ndjson";
  fs::path state_dir = "state";
  fs::path output_dir = "out";
  std::optional<fs::path> holdout;  // NDJSON of held-out samples or keys
};

struct EndpointConfig {
  std::string id;
  std::string kind = "STUB";  // STUB | HTTP
  std::string url;
  std::string model;
  std::string api_key_env;
  std::uint32_t timeout_s = 300;
  std::size_t max_in_flight = 4;
  double rate_per_sec = 0.0;
  double burst = 1.0;
  nlohmann::json stub_rules = nlohmann::json::array();
};

struct Roles {
  std::string image_to_code = "default";
  std::string translator = "default";
  std::string question = "default";
  std::string specialist = "default";
  std::string generalist = "default";
  std::string k12 = "default";
};

struct RenderSettings {
  std::string kind = "STUB";  // STUB | TOOLCHAIN
  double timeout_s = 60.0;
  std::uint32_t dpi = 150;
  std::size_t workers = 4;
  nlohmann::json stub_table = nlohmann::json::object();
  nlohmann::json precheck_rules;  // null: built-in rules
  render::ToolchainConfig toolchain;
};

struct RoundConfig {
  std::uint32_t round_index = 0;
  std::vector<corpus::SourceTag> sources = {corpus::SourceTag::DatikzSeed};
  std::size_t sample_cap = 0;  // 0: no cap
  double tikz_share = 1.0;     // remainder goes to PLOTSCRIPT
  double temperature = 0.0;
  std::string endpoint;        // empty: roles.image_to_code
  std::size_t workers = 4;
};

struct SynthConfig {
  std::vector<corpus::SourceTag> sources = {corpus::SourceTag::DatikzSeed};
  std::size_t seed_cap = 0;
  std::size_t attempts_per_seed = 1;
  double temperature = 0.7;
  double solver_temperature = 0.0;
  double question_temperature = 0.0;
  Dialect dialect = Dialect::Tikz;
  std::size_t workers = 4;
};

struct OcrSettings {
  std::string kind = "STUB";  // STUB | HTTP
  std::string url;
  std::map<std::string, std::string> table;  // digest hex -> LaTeX
};

struct PipelineConfig {
  Paths paths;
  std::uint64_t seed = 0;
  std::vector<EndpointConfig> endpoints;
  modelgate::GatewayConfig gateway;
  Roles roles;
  RenderSettings render;
  filters::FilterConfig filters;
  filters::FilterConfig synth_filters;
  corpus::ClassifyConfig classify;
  std::map<std::uint32_t, RoundConfig> rounds;
  RoundConfig round_defaults;
  SynthConfig synth;
  OcrSettings ocr;
  std::size_t checkpoint_every = 1000;
  std::string dataset_name = "figforge";
  pairs::EmissionOrder emission_order = pairs::EmissionOrder::InterleavedByHash;
  std::size_t k12_workers = 4;

  /// Round settings for an index: the configured entry or the defaults.
  RoundConfig round(std::uint32_t index) const;
};

/// Relative paths in the file are resolved against its directory. Unknown keys
/// are ignored; malformed values throw Error(ConfigInvalid).
PipelineConfig load_config(const fs::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = {});
nlohmann::json to_json(const PipelineConfig& cfg);

/// Every endpoint becomes a stub, rendering and OCR use their stubs.
void force_stub(PipelineConfig& cfg);

/// Digest of everything that affects outputs; paths are excluded so the same
/// settings in another directory give the same digest.
std::string config_digest(const PipelineConfig& cfg);

/// Endpoints from the config; a stub named "default" is added when no
/// endpoint has that id, and every role must name a known endpoint.
std::unique_ptr<modelgate::ModelGateway> build_gateway(const PipelineConfig& cfg);
std::unique_ptr<render::Renderer> build_renderer(const PipelineConfig& cfg);
render::PrecheckTable build_precheck(const PipelineConfig& cfg);
std::unique_ptr<k12::OcrClient> build_ocr(const PipelineConfig& cfg);

}  // namespace figforge::orchestrator
