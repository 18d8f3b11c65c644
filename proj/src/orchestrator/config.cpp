#include "figforge/orchestrator/config.hpp"

#include <cmath>

#include "figforge/common/digest.hpp"
#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"

namespace figforge::orchestrator {

RoundConfig PipelineConfig::round(std::uint32_t index) const {
  auto it = rounds.find(index);
  RoundConfig r = it == rounds.end() ? round_defaults : it->second;
  r.round_index = index;
  return r;
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::vector<corpus::SourceTag> source_list(const nlohmann::json& j) {
  std::vector<corpus::SourceTag> out;
  for (const auto& s : j) out.push_back(corpus::parse_source_tag(s.get<std::string>()));
  return out;
}

nlohmann::json source_names(const std::vector<corpus::SourceTag>& tags) {
  nlohmann::json out = nlohmann::json::array();
  for (auto t : tags) out.push_back(corpus::to_string(t));
  return out;
}

RoundConfig round_from_json(const nlohmann::json& j, RoundConfig r) {
  r.round_index = j.value("round_index", r.round_index);
  if (j.contains("sources")) r.sources = source_list(j["sources"]);
  r.sample_cap = j.value("sample_cap", r.sample_cap);
  if (j.contains("dialect_mix")) {
    const auto& mix = j["dialect_mix"];
    const double tikz = mix.value("TIKZ", 0.0), plot = mix.value("PLOTSCRIPT", 0.0);
    if (tikz < 0 || plot < 0 || tikz + plot <= 0) invalid("dialect_mix needs non-negative weights with a positive sum");
    r.tikz_share = tikz / (tikz + plot);
  }
  r.temperature = j.value("temperature", r.temperature);
  r.endpoint = j.value("endpoint", r.endpoint);
  r.workers = j.value("workers", r.workers);
  if (r.workers == 0) invalid("round workers must be positive");
  return r;
}

nlohmann::json to_json(const RoundConfig& r) {
  return {{"round_index", r.round_index},
          {"sources", source_names(r.sources)},
          {"sample_cap", r.sample_cap},
          {"dialect_mix", {{"TIKZ", r.tikz_share}, {"PLOTSCRIPT", 1.0 - r.tikz_share}}},
          {"temperature", r.temperature},
          {"endpoint", r.endpoint},
          {"workers", r.workers}};
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) invalid("config must be a JSON object");
  PipelineConfig cfg;
  try {
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      if (p.contains("catalog")) cfg.paths.catalog = resolve(base_dir, p["catalog"].get<std::string>());
      if (p.contains("state_dir")) cfg.paths.state_dir = resolve(base_dir, p["state_dir"].get<std::string>());
      if (p.contains("output_dir")) cfg.paths.output_dir = resolve(base_dir, p["output_dir"].get<std::string>());
      if (p.contains("holdout") && !p["holdout"].is_null()) {
        cfg.paths.holdout = resolve(base_dir, p["holdout"].get<std::string>());
      }
    } else if (!base_dir.empty()) {
      cfg.paths.catalog = base_dir / cfg.paths.catalog;
      cfg.paths.state_dir = base_dir / cfg.paths.state_dir;
      cfg.paths.output_dir = base_dir / cfg.paths.output_dir;
    }
    cfg.seed = j.value("seed", cfg.seed);
    for (const auto& e : j.value("endpoints", nlohmann::json::array())) {
      EndpointConfig ec;
      ec.id = e.at("id").get<std::string>();
      ec.kind = e.value("kind", ec.kind);
      if (ec.kind != "STUB" && ec.kind != "HTTP") invalid("endpoint kind must be STUB or HTTP: " + ec.kind);
      ec.url = e.value("url", ec.url);
      ec.model = e.value("model", ec.model);
      ec.api_key_env = e.value("api_key_env", ec.api_key_env);
      ec.timeout_s = e.value("timeout_s", ec.timeout_s);
      ec.max_in_flight = e.value("max_in_flight", ec.max_in_flight);
      ec.rate_per_sec = e.value("rate_per_sec", ec.rate_per_sec);
      ec.burst = e.value("burst", ec.burst);
      if (e.contains("stub_rules")) ec.stub_rules = e["stub_rules"];
      if (ec.kind == "HTTP" && ec.url.empty()) invalid("HTTP endpoint " + ec.id + " has no url");
      cfg.endpoints.push_back(std::move(ec));
    }
    if (j.contains("gateway")) {
      const auto& g = j["gateway"];
      cfg.gateway.retry_budget = g.value("retry_budget", cfg.gateway.retry_budget);
      cfg.gateway.backoff_base = std::chrono::milliseconds(g.value("backoff_ms", cfg.gateway.backoff_base.count()));
      cfg.gateway.max_tokens = g.value("max_tokens", cfg.gateway.max_tokens);
      if (cfg.gateway.retry_budget == 0) invalid("retry_budget must be at least 1");
    }
    if (j.contains("roles")) {
      const auto& r = j["roles"];
      cfg.roles.image_to_code = r.value("image_to_code", cfg.roles.image_to_code);
      cfg.roles.translator = r.value("translator", cfg.roles.translator);
      cfg.roles.question = r.value("question", cfg.roles.question);
      cfg.roles.specialist = r.value("specialist", cfg.roles.specialist);
      cfg.roles.generalist = r.value("generalist", cfg.roles.generalist);
      cfg.roles.k12 = r.value("k12", cfg.roles.k12);
    }
    if (j.contains("render")) {
      const auto& r = j["render"];
      cfg.render.kind = r.value("kind", cfg.render.kind);
      if (cfg.render.kind != "STUB" && cfg.render.kind != "TOOLCHAIN") invalid("render kind must be STUB or TOOLCHAIN");
      cfg.render.timeout_s = r.value("timeout_s", cfg.render.timeout_s);
      cfg.render.dpi = r.value("dpi", cfg.render.dpi);
      cfg.render.workers = r.value("workers", cfg.render.workers);
      if (r.contains("stub_table")) cfg.render.stub_table = r["stub_table"];
      if (r.contains("precheck_rules")) cfg.render.precheck_rules = r["precheck_rules"];
      auto& tc = cfg.render.toolchain;
      tc.tex_compiler = r.value("tex_compiler", tc.tex_compiler);
      if (r.contains("rasterizer")) tc.rasterizer = r["rasterizer"].get<std::vector<std::string>>();
      tc.interpreter = r.value("interpreter", tc.interpreter);
      tc.tex_preamble = r.value("tex_preamble", tc.tex_preamble);
      if (r.contains("scratch_root")) tc.scratch_root = resolve(base_dir, r["scratch_root"].get<std::string>());
      tc.memory_bytes = r.value("memory_bytes", tc.memory_bytes);
      tc.isolate_network = r.value("isolate_network", tc.isolate_network);
      if (!(cfg.render.timeout_s > 0) || cfg.render.workers == 0) invalid("render timeout and workers must be positive");
    }
    if (j.contains("filters")) cfg.filters = filters::filter_config_from_json(j["filters"], base_dir);
    if (j.contains("synth_filters")) {
      cfg.synth_filters = filters::filter_config_from_json(j["synth_filters"], base_dir);
    }
    if (j.contains("classify")) {
      cfg.classify.max_equation_height_px = j["classify"].value("max_equation_height_px", cfg.classify.max_equation_height_px);
      cfg.classify.max_equation_area_px = j["classify"].value("max_equation_area_px", cfg.classify.max_equation_area_px);
    }
    if (j.contains("round_defaults")) cfg.round_defaults = round_from_json(j["round_defaults"], cfg.round_defaults);
    for (const auto& r : j.value("rounds", nlohmann::json::array())) {
      RoundConfig rc = round_from_json(r, cfg.round_defaults);
      if (cfg.rounds.count(rc.round_index)) invalid("round " + std::to_string(rc.round_index) + " configured twice");
      cfg.rounds[rc.round_index] = rc;
    }
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      if (s.contains("sources")) cfg.synth.sources = source_list(s["sources"]);
      cfg.synth.seed_cap = s.value("seed_cap", cfg.synth.seed_cap);
      cfg.synth.attempts_per_seed = s.value("attempts_per_seed", cfg.synth.attempts_per_seed);
      cfg.synth.temperature = s.value("temperature", cfg.synth.temperature);
      cfg.synth.solver_temperature = s.value("solver_temperature", cfg.synth.solver_temperature);
      cfg.synth.question_temperature = s.value("question_temperature", cfg.synth.question_temperature);
      if (s.contains("dialect")) cfg.synth.dialect = modelgate::parse_dialect(s["dialect"].get<std::string>());
      cfg.synth.workers = s.value("workers", cfg.synth.workers);
      if (cfg.synth.workers == 0) invalid("synth workers must be positive");
    }
    if (j.contains("ocr")) {
      const auto& o = j["ocr"];
      cfg.ocr.kind = o.value("kind", cfg.ocr.kind);
      if (cfg.ocr.kind != "STUB" && cfg.ocr.kind != "HTTP") invalid("ocr kind must be STUB or HTTP");
      cfg.ocr.url = o.value("url", cfg.ocr.url);
      if (o.contains("table")) cfg.ocr.table = o["table"].get<std::map<std::string, std::string>>();
    }
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    if (cfg.checkpoint_every == 0) invalid("checkpoint_every must be positive");
    cfg.dataset_name = j.value("dataset_name", cfg.dataset_name);
    if (j.contains("emission_order")) cfg.emission_order = pairs::parse_emission_order(j["emission_order"].get<std::string>());
    cfg.k12_workers = j.value("k12_workers", cfg.k12_workers);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) invalid("config file not found: " + path.string());
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false, true);
  if (j.is_discarded()) invalid("config is not valid JSON: " + path.string());
  return config_from_json(j, fs::absolute(path).parent_path());
}

nlohmann::json to_json(const PipelineConfig& cfg) {
  nlohmann::json endpoints = nlohmann::json::array();
  for (const auto& e : cfg.endpoints) {
    endpoints.push_back({{"id", e.id},
                         {"kind", e.kind},
                         {"url", e.url},
                         {"model", e.model},
                         {"api_key_env", e.api_key_env},
                         {"timeout_s", e.timeout_s},
                         {"max_in_flight", e.max_in_flight},
                         {"rate_per_sec", e.rate_per_sec},
                         {"burst", e.burst},
                         {"stub_rules", e.stub_rules}});
  }
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& [i, r] : cfg.rounds) rounds.push_back(to_json(r));
  const auto& tc = cfg.render.toolchain;
  nlohmann::json j{
      {"paths",
       {{"catalog", cfg.paths.catalog.string()},
        {"state_dir", cfg.paths.state_dir.string()},
        {"output_dir", cfg.paths.output_dir.string()},
        {"holdout", cfg.paths.holdout ? nlohmann::json(cfg.paths.holdout->string()) : nlohmann::json(nullptr)}}},
      {"seed", cfg.seed},
      {"endpoints", endpoints},
      {"gateway",
       {{"retry_budget", cfg.gateway.retry_budget},
        {"backoff_ms", cfg.gateway.backoff_base.count()},
        {"max_tokens", cfg.gateway.max_tokens}}},
      {"roles",
       {{"image_to_code", cfg.roles.image_to_code},
        {"translator", cfg.roles.translator},
        {"question", cfg.roles.question},
        {"specialist", cfg.roles.specialist},
        {"generalist", cfg.roles.generalist},
        {"k12", cfg.roles.k12}}},
      {"render",
       {{"kind", cfg.render.kind},
        {"timeout_s", cfg.render.timeout_s},
        {"dpi", cfg.render.dpi},
        {"workers", cfg.render.workers},
        {"stub_table", cfg.render.stub_table},
        {"precheck_rules", cfg.render.precheck_rules},
        {"tex_compiler", tc.tex_compiler},
        {"rasterizer", tc.rasterizer},
        {"interpreter", tc.interpreter},
        {"tex_preamble", tc.tex_preamble},
        {"memory_bytes", tc.memory_bytes},
        {"isolate_network", tc.isolate_network}}},
      {"filters", filters::to_json(cfg.filters)},
      {"synth_filters", filters::to_json(cfg.synth_filters)},
      {"classify",
       {{"max_equation_height_px", cfg.classify.max_equation_height_px},
        {"max_equation_area_px", cfg.classify.max_equation_area_px}}},
      {"round_defaults", to_json(cfg.round_defaults)},
      {"rounds", rounds},
      {"synth",
       {{"sources", source_names(cfg.synth.sources)},
        {"seed_cap", cfg.synth.seed_cap},
        {"attempts_per_seed", cfg.synth.attempts_per_seed},
        {"temperature", cfg.synth.temperature},
        {"solver_temperature", cfg.synth.solver_temperature},
        {"question_temperature", cfg.synth.question_temperature},
        {"dialect", modelgate::to_string(cfg.synth.dialect)},
        {"workers", cfg.synth.workers}}},
      {"ocr", {{"kind", cfg.ocr.kind}, {"url", cfg.ocr.url}, {"table", cfg.ocr.table}}},
      {"checkpoint_every", cfg.checkpoint_every},
      {"dataset_name", cfg.dataset_name},
      {"emission_order", pairs::to_string(cfg.emission_order)},
      {"k12_workers", cfg.k12_workers}};
  return j;
}

void force_stub(PipelineConfig& cfg) {
  for (auto& e : cfg.endpoints) e.kind = "STUB";
  cfg.render.kind = "STUB";
  cfg.ocr.kind = "STUB";
}

std::string config_digest(const PipelineConfig& cfg) {
  nlohmann::json j = to_json(cfg);
  j.erase("paths");
  // Worker counts and checkpoint spacing change scheduling, not results.
  j.erase("checkpoint_every");
  j.erase("k12_workers");
  j["render"].erase("workers");
  j["synth"].erase("workers");
  j["round_defaults"].erase("workers");
  for (auto& r : j["rounds"]) r.erase("workers");
  return sha256(j.dump()).hex;
}

std::unique_ptr<modelgate::ModelGateway> build_gateway(const PipelineConfig& cfg) {
  auto gw = std::make_unique<modelgate::ModelGateway>(cfg.gateway);
  bool has_default = false;
  for (const auto& e : cfg.endpoints) {
    std::shared_ptr<modelgate::Endpoint> ep;
    if (e.kind == "HTTP") {
      ep = std::make_shared<modelgate::HttpEndpoint>(
          modelgate::HttpEndpointConfig{e.url, e.model, e.api_key_env, std::chrono::seconds(e.timeout_s)});
    } else {
      auto stub = std::make_shared<modelgate::StubEndpoint>();
      for (auto& rule : modelgate::stub_rules_from_json(e.stub_rules)) stub->add_rule(std::move(rule));
      ep = stub;
    }
    gw->add_endpoint({e.id, ep, e.model, e.max_in_flight, e.rate_per_sec, e.burst});
    has_default = has_default || e.id == "default";
  }
  if (!has_default) gw->add_endpoint({"default", std::make_shared<modelgate::StubEndpoint>(), "stub", 8, 0.0, 1.0});
  std::vector<std::string> role_ids = {cfg.roles.image_to_code, cfg.roles.translator, cfg.roles.question,
                                       cfg.roles.specialist,    cfg.roles.generalist, cfg.roles.k12};
  for (const auto& [i, r] : cfg.rounds) {
    if (!r.endpoint.empty()) role_ids.push_back(r.endpoint);
  }
  for (const auto& id : role_ids) {
    if (!gw->has_endpoint(id)) invalid("role refers to unknown endpoint '" + id + "'");
  }
  return gw;
}

std::unique_ptr<render::Renderer> build_renderer(const PipelineConfig& cfg) {
  if (cfg.render.kind == "TOOLCHAIN") return std::make_unique<render::ToolchainRenderer>(cfg.render.toolchain);
  return std::make_unique<render::StubRenderer>(render::stub_table_from_json(cfg.render.stub_table));
}

render::PrecheckTable build_precheck(const PipelineConfig& cfg) {
  if (cfg.render.precheck_rules.is_null()) return render::PrecheckTable();
  return render::PrecheckTable(render::precheck_rules_from_json(cfg.render.precheck_rules));
}

std::unique_ptr<k12::OcrClient> build_ocr(const PipelineConfig& cfg) {
  if (cfg.ocr.kind == "HTTP") return std::make_unique<k12::HttpOcr>(k12::HttpOcrConfig{cfg.ocr.url, std::chrono::seconds(60)});
  return std::make_unique<k12::StubOcr>(cfg.ocr.table);
}

}  // namespace figforge::orchestrator
