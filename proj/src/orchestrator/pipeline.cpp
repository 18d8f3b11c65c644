#include "figforge/orchestrator/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unistd.h>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/common/parallel.hpp"
#include "figforge/filters/chain.hpp"
#include "figforge/k12/pipeline.hpp"
#include "figforge/pairs/pairs.hpp"
#include "figforge/synth/synth.hpp"

namespace figforge::orchestrator {

namespace {

constexpr Stage kStages[] = {Stage::None, Stage::Select, Stage::Process, Stage::Solve, Stage::Write, Stage::Stats};

nlohmann::json read_json(const fs::path& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::CheckpointIoFailure, "corrupt state file " + path.string());
  return j;
}

void write_state(const fs::path& path, const nlohmann::json& j) {
  try {
    atomic_write_file(path, j.dump(2) + "\n");
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CheckpointIoFailure, "writing " + path.string() + ": " + e.what());
  }
}

std::vector<nlohmann::json> read_lines(const fs::path& path) {
  std::vector<nlohmann::json> out;
  if (!fs::exists(path)) return out;
  for_each_line(path, [&](std::string_view line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::CheckpointIoFailure, "corrupt journal line in " + path.string());
    out.push_back(std::move(j));
  });
  return out;
}

// Publishes lines through a temp file whose line count is checked first.
void write_ndjson(const fs::path& path, const std::vector<std::string>& lines) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string());
    for (const auto& l : lines) out << l << '\n';
    if (!out.flush()) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  const std::size_t n = count_lines(tmp);
  if (n != lines.size()) {
    fs::remove(tmp);
    throw Error(ErrorCode::CountMismatch, path.filename().string() + ": wrote " + std::to_string(n) + " of " +
                                              std::to_string(lines.size()) + " lines");
  }
  fs::rename(tmp, path);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Order-defining key: a digest of the seed and the asset id.
std::string rank(std::uint64_t seed, const std::string& salt, const std::string& id) {
  return sha256(std::to_string(seed) + ":" + salt + ":" + id).hex;
}

std::vector<corpus::ImageAsset> select_assets(const std::vector<corpus::ImageAsset>& all,
                                              const std::vector<corpus::SourceTag>& sources, std::uint64_t seed,
                                              const std::string& salt, std::size_t cap) {
  std::vector<std::pair<std::string, corpus::ImageAsset>> ranked;
  for (const auto& a : all) {
    if (a.kind == corpus::AssetKind::Equation) continue;
    if (std::find(sources.begin(), sources.end(), a.source) == sources.end()) continue;
    ranked.emplace_back(rank(seed, salt, a.asset_id), a);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  if (cap > 0 && ranked.size() > cap) ranked.resize(cap);
  std::vector<corpus::ImageAsset> out;
  for (auto& [k, a] : ranked) out.push_back(std::move(a));
  return out;
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::None: return "NONE";
    case Stage::Select: return "SELECT";
    case Stage::Process: return "PROCESS";
    case Stage::Solve: return "SOLVE";
    case Stage::Write: return "WRITE";
    case Stage::Stats: return "STATS";
  }
  return "NONE";
}

Stage parse_stage(std::string_view name) {
  for (auto s : kStages) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown stage '" + std::string(name) + "'");
}

HaltPoint parse_halt_point(std::string_view text) {
  HaltPoint h;
  const std::size_t colon = text.find(':');
  h.stage = parse_stage(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    try {
      h.after = std::stoul(std::string(text.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigInvalid, "bad halt point '" + std::string(text) + "'");
    }
  }
  return h;
}

nlohmann::json to_json(const Checkpoint& c) {
  return {{"name", c.name},
          {"kind", c.kind},
          {"round_index", c.round_index},
          {"config_digest", c.config_digest},
          {"stage", to_string(c.stage)},
          {"processed", c.processed},
          {"solved", c.solved},
          {"wall_ms", c.wall_ms}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  c.name = j.at("name").get<std::string>();
  c.kind = j.at("kind").get<std::string>();
  c.round_index = j.at("round_index").get<std::uint32_t>();
  c.config_digest = j.at("config_digest").get<std::string>();
  c.stage = parse_stage(j.at("stage").get<std::string>());
  c.processed = j.at("processed").get<std::size_t>();
  c.solved = j.at("solved").get<std::size_t>();
  c.wall_ms = j.value("wall_ms", 0.0);
  return c;
}

struct Pipeline::Pass {
  Checkpoint cp;
  fs::path state;
  fs::path out;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  nlohmann::json selection;

  fs::path checkpoint_file() const { return state / "checkpoint.json"; }
  fs::path selection_file() const { return state / "selection.json"; }
  fs::path journal_file() const { return state / "journal.ndjson"; }
  fs::path solve_file() const { return state / "solve.ndjson"; }
  fs::path images_dir() const { return state / "images"; }
};

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)),
      digest_(config_digest(cfg_)),
      gateway_(build_gateway(cfg_)),
      renderer_(build_renderer(cfg_)),
      precheck_(build_precheck(cfg_)) {}

Pipeline::~Pipeline() = default;

std::string Pipeline::pass_name(const std::string& kind, std::uint32_t index) {
  return lower(kind) + "-" + std::to_string(index);
}

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

corpus::Catalog& Pipeline::catalog() {
  if (!catalog_) {
    std::error_code ec;
    fs::create_directories(cfg_.paths.catalog.parent_path(), ec);
    catalog_ = std::make_unique<corpus::Catalog>(cfg_.paths.catalog);
  }
  return *catalog_;
}

corpus::IngestReport Pipeline::ingest(const fs::path& root, corpus::SourceTag source) {
  corpus::IngestOptions opts;
  opts.classify = cfg_.classify;
  return corpus::ingest(fs::absolute(root), source, catalog(), opts);
}

std::vector<RoundStats> Pipeline::history() const {
  std::vector<RoundStats> out;
  const fs::path file = cfg_.paths.state_dir / "history.json";
  if (!fs::exists(file)) return out;
  for (const auto& j : read_json(file)) out.push_back(round_stats_from_json(j));
  return out;
}

Report Pipeline::report() const { return build_report(history()); }

void Pipeline::save_checkpoint(Pass& p) {
  const auto now = std::chrono::steady_clock::now();
  p.cp.wall_ms += std::chrono::duration<double, std::milli>(now - p.started).count();
  p.started = now;
  write_state(p.checkpoint_file(), to_json(p.cp));
}

void Pipeline::halt_after(Stage s) {
  if (halt_ && halt_->stage == s && halt_->after == 0) {
    throw HaltRequested("halted after " + std::string(to_string(s)));
  }
}

RoundStats Pipeline::run_round(std::uint32_t index) { return run_pass("ROUND", index); }
RoundStats Pipeline::run_translation_pass(std::uint32_t index) { return run_pass("TRANSLATE", index); }
RoundStats Pipeline::run_problem_synthesis(std::uint32_t index) { return run_pass("SYNTH", index); }

std::optional<RoundStats> Pipeline::resume() {
  const fs::path active = cfg_.paths.state_dir / "active.json";
  if (!fs::exists(active)) return std::nullopt;
  const auto j = read_json(active);
  return run_pass(j.at("kind").get<std::string>(), j.at("round_index").get<std::uint32_t>());
}

RoundStats Pipeline::run_pass(const std::string& kind, std::uint32_t index) {
  if (kind != "ROUND" && kind != "TRANSLATE" && kind != "SYNTH") {
    throw Error(ErrorCode::ConfigInvalid, "unknown pass kind " + kind);
  }
  Pass p;
  p.cp.name = pass_name(kind, index);
  p.cp.kind = kind;
  p.cp.round_index = index;
  p.cp.config_digest = digest_;
  p.state = pass_state_dir(p.cp.name);
  p.out = pass_output_dir(p.cp.name);

  if (fs::exists(p.checkpoint_file())) {
    const Checkpoint prior = checkpoint_from_json(read_json(p.checkpoint_file()));
    if (prior.config_digest != digest_) {
      throw Error(ErrorCode::ConfigInvalid, p.cp.name + " was started with a different configuration");
    }
    p.cp = prior;
  }
  if (p.cp.stage == Stage::Stats) {
    log(p.cp.name + " already complete");
    for (const auto& s : history()) {
      if (s.name == p.cp.name) return s;
    }
    throw Error(ErrorCode::CheckpointIoFailure, p.cp.name + " is complete but missing from the history");
  }
  if (kind == "ROUND" && p.cp.stage == Stage::None) {
    for (const auto& s : history()) {
      if (s.kind == "ROUND" && s.round_index >= index) {
        throw Error(ErrorCode::ConfigInvalid, "round " + std::to_string(index) + " must come after completed round " +
                                                  std::to_string(s.round_index));
      }
    }
  }

  std::error_code ec;
  fs::create_directories(p.images_dir(), ec);
  if (ec) throw Error(ErrorCode::CheckpointIoFailure, "cannot create " + p.state.string() + ": " + ec.message());
  write_state(cfg_.paths.state_dir / "active.json", {{"kind", kind}, {"round_index", index}});
  if (p.cp.stage != Stage::None) log(p.cp.name + ": resuming after " + std::string(to_string(p.cp.stage)));

  if (p.cp.stage < Stage::Select) {
    select(p);
    p.cp.stage = Stage::Select;
    save_checkpoint(p);
    halt_after(Stage::Select);
  }
  p.selection = read_json(p.selection_file());
  if (p.cp.stage < Stage::Process) {
    process(p);
    p.cp.stage = Stage::Process;
    save_checkpoint(p);
    halt_after(Stage::Process);
  }
  if (kind == "SYNTH" && p.cp.stage < Stage::Solve) {
    solve(p);
    p.cp.stage = Stage::Solve;
    save_checkpoint(p);
    halt_after(Stage::Solve);
  }
  if (p.cp.stage < Stage::Write) {
    write(p);
    p.cp.stage = Stage::Write;
    save_checkpoint(p);
    halt_after(Stage::Write);
  }
  save_checkpoint(p);
  RoundStats s = stats(p);
  p.cp.stage = Stage::Stats;
  write_state(p.checkpoint_file(), to_json(p.cp));
  fs::remove(cfg_.paths.state_dir / "active.json", ec);
  halt_after(Stage::Stats);
  return s;
}

void Pipeline::select(Pass& p) {
  nlohmann::json items = nlohmann::json::array();
  if (p.cp.kind == "ROUND") {
    const RoundConfig r = cfg_.round(p.cp.round_index);
    const auto chosen = select_assets(catalog().assets(), r.sources, cfg_.seed, p.cp.name, r.sample_cap);
    for (const auto& a : chosen) {
      const std::string h = rank(cfg_.seed, p.cp.name + ":dialect", a.asset_id);
      const double u = static_cast<double>(std::stoull(h.substr(0, 12), nullptr, 16)) / static_cast<double>(1ull << 48);
      const Dialect d = u < r.tikz_share ? Dialect::Tikz : Dialect::PlotScript;
      items.push_back({{"asset", corpus::to_json(a)}, {"dialect", modelgate::to_string(d)}});
    }
  } else if (p.cp.kind == "TRANSLATE") {
    const std::string source = pass_name("ROUND", p.cp.round_index);
    const fs::path cp_file = pass_state_dir(source) / "checkpoint.json";
    if (!fs::exists(cp_file) || checkpoint_from_json(read_json(cp_file)).stage < Stage::Write) {
      throw Error(ErrorCode::PreconditionViolation, source + " has not written its TIKZ manifest yet");
    }
    for (const auto& e : read_lines(pass_state_dir(source) / "journal.ndjson")) {
      if (e.value("result", "") == "PAIR" && e["pair"]["code"]["dialect"] == "TIKZ") items.push_back({{"pair", e["pair"]}});
    }
  } else {
    const auto& s = cfg_.synth;
    for (const auto& a : select_assets(catalog().assets(), s.sources, cfg_.seed, p.cp.name, s.seed_cap)) {
      for (std::size_t k = 0; k < s.attempts_per_seed; ++k) {
        items.push_back({{"asset", corpus::to_json(a)}, {"dialect", modelgate::to_string(s.dialect)}, {"attempt", k}});
      }
    }
  }
  if (items.empty()) throw Error(ErrorCode::PreconditionViolation, p.cp.name + ": nothing selected");
  log(p.cp.name + ": selected " + std::to_string(items.size()) + " item(s)");
  write_state(p.selection_file(), items);
}

namespace {

struct Produced {
  std::optional<modelgate::CodeSample> code;
  std::string gen_error;
  std::optional<render::RenderOutcome> outcome;
  std::optional<filters::PixelStats> stats;
};

}  // namespace

void Pipeline::process(Pass& p) {
  const auto& items = p.selection;
  const std::size_t n = items.size();
  const fs::path journal_path = p.journal_file();
  if (fs::exists(journal_path) && !truncate_to_lines(journal_path, p.cp.processed)) {
    throw Error(ErrorCode::CheckpointIoFailure, journal_path.string() + " is shorter than its checkpoint");
  }
  if (!fs::exists(journal_path) && p.cp.processed > 0) {
    throw Error(ErrorCode::CheckpointIoFailure, journal_path.string() + " is missing");
  }

  filters::DedupStore dedup(cfg_.filters.near_duplicate_jaccard);
  dedup.load(cfg_.paths.state_dir / "dedup.keys");
  for (const auto& e : read_lines(journal_path)) {
    if (e.contains("dedup_key")) {
      const auto code = modelgate::code_sample_from_json(e["code"]);
      dedup.admit(ContentDigest{"sha256", e["dedup_key"].get<std::string>()}, filters::normalize_code(code));
    }
  }
  pairs::HoldoutKeys holdout;
  if (cfg_.paths.holdout) holdout = pairs::load_holdout_keys(*cfg_.paths.holdout);

  const RoundConfig round = cfg_.round(p.cp.round_index);
  const bool synth = p.cp.kind == "SYNTH";
  const bool translate = p.cp.kind == "TRANSLATE";
  const std::size_t workers = synth ? cfg_.synth.workers : round.workers;
  const double temperature = synth ? cfg_.synth.temperature : round.temperature;
  const std::string endpoint = synth || round.endpoint.empty() ? cfg_.roles.image_to_code : round.endpoint;
  render::RenderPool pool(*renderer_, precheck_, cfg_.render.workers);

  auto produce = [&](std::size_t i) {
    Produced r;
    const auto& item = items[i];
    modelgate::GenerationResult gen;
    try {
      if (translate) {
        gen = gateway_->translate_code(pairs::pair_from_json(item["pair"]).code, cfg_.roles.translator, 0.0);
      } else {
        gen = gateway_->image_to_code(corpus::asset_from_json(item["asset"]),
                                      modelgate::parse_dialect(item["dialect"].get<std::string>()), temperature,
                                      endpoint, p.cp.round_index);
      }
    } catch (const Error& e) {
      r.gen_error = std::string(to_string(e.code()));
      return r;
    }
    if (!gen.extracted_code) {
      r.gen_error = "NO_CODE_BLOCK";
      return r;
    }
    r.code = gen.extracted_code;
    render::RenderJob job{*r.code, cfg_.render.timeout_s, cfg_.render.dpi, {}};
    r.outcome = pool.run_one(job);
    if (r.outcome->status == render::RenderStatus::Success) r.stats = filters::pixel_stats(r.outcome->png);
    return r;
  };

  LineAppender journal(journal_path);
  std::size_t committed_here = 0;
  auto commit = [&](std::size_t i, Produced r) {
    const auto& item = items[i];
    nlohmann::json e{{"seq", i}};
    e["item"] = translate ? item["pair"]["pair_id"] : item["asset"]["asset_id"];
    if (!r.code) {
      e["result"] = "GEN_FAIL";
      e["error"] = r.gen_error;
    } else {
      const auto& code = *r.code;
      const auto& outcome = *r.outcome;
      e["code"] = modelgate::to_json(code);
      e["render_status"] = render::to_string(outcome.status);
      if (outcome.status != render::RenderStatus::Success) {
        e["result"] = "RENDER_FAIL";
        e["render_log"] = outcome.log.substr(0, 400);
      } else {
        const auto chained = filters::run_chain(code, *r.stats, cfg_.filters, dedup);
        e["pixel"] = {{"mean", r.stats->mean}, {"std", r.stats->std}};
        e["audit"] = filters::audit_lines(code.code_id, chained);
        if (chained.audit.front().verdict.passed()) e["dedup_key"] = filters::dedup_key(code).hex;
        if (!chained.verdict.passed()) {
          e["result"] = "REJECT";
        } else {
          pairs::PairMeta meta{p.cp.round_index, code.provenance.seed_asset_id, std::nullopt};
          if (meta.seed_asset_id->empty()) meta.seed_asset_id.reset();
          if (translate) meta.ancestor_pair_id = item["pair"]["pair_id"].get<std::string>();
          pairs::PairRecord pair = pairs::assemble_pair(code, outcome, chained.verdict, meta);
          const auto guard = pairs::holdout_guard(pair, holdout);
          if (!guard.passed()) {
            e["result"] = "HOLDOUT";
          } else {
            const fs::path image = p.images_dir() / (pair.image.digest.hex + ".png");
            if (!fs::exists(image)) atomic_write_file(image, pair.png);
            pair.image.storage_ref = image.string();
            e["result"] = "PAIR";
            e["pair"] = pairs::to_json(pair);
          }
        }
      }
    }
    journal.append(e.dump());
    ++p.cp.processed;
    ++committed_here;
    if (p.cp.processed % cfg_.checkpoint_every == 0) {
      journal.sync();
      save_checkpoint(p);
    }
    if (halt_ && halt_->stage == Stage::Process && halt_->after > 0 && committed_here == halt_->after) {
      journal.sync();
      throw HaltRequested("halted during PROCESS after " + std::to_string(committed_here) + " item(s)");
    }
  };

  ordered_stream<Produced>(p.cp.processed, n, workers, workers * 4, produce, commit);
  journal.sync();
  log(p.cp.name + ": processed " + std::to_string(p.cp.processed) + " item(s)");
}

namespace {

struct Solved {
  std::optional<synth::SynthQuestion> question;
  std::string question_error;
  std::pair<synth::SolutionAttempt, synth::SolutionAttempt> attempts;
};

std::vector<pairs::PairRecord> journal_pairs(const fs::path& journal) {
  std::vector<pairs::PairRecord> out;
  for (const auto& e : read_lines(journal)) {
    if (e.value("result", "") == "PAIR") out.push_back(pairs::pair_from_json(e["pair"]));
  }
  return out;
}

}  // namespace

void Pipeline::solve(Pass& p) {
  const auto pair_list = journal_pairs(p.journal_file());
  const fs::path solve_path = p.solve_file();
  if (fs::exists(solve_path) && !truncate_to_lines(solve_path, p.cp.solved)) {
    throw Error(ErrorCode::CheckpointIoFailure, solve_path.string() + " is shorter than its checkpoint");
  }
  filters::DedupStore questions;
  for (const auto& e : read_lines(solve_path)) {
    if (e.contains("question_key")) questions.admit(ContentDigest{"sha256", e["question_key"].get<std::string>()});
  }
  const synth::SolverConfig solvers{cfg_.roles.specialist, cfg_.roles.generalist, cfg_.synth.solver_temperature};

  auto produce = [&](std::size_t i) {
    Solved s;
    try {
      s.question = synth::craft_question(pair_list[i], *gateway_, cfg_.roles.question, cfg_.synth.question_temperature);
    } catch (const Error& e) {
      s.question_error = std::string(to_string(e.code()));
      return s;
    }
    s.attempts = synth::solve_dual(*s.question, pair_list[i], *gateway_, solvers);
    return s;
  };

  LineAppender journal(solve_path);
  synth::AcceptanceCounter counter;
  std::size_t committed_here = 0;
  auto commit = [&](std::size_t i, Solved s) {
    const auto& pair = pair_list[i];
    nlohmann::json e{{"seq", i}, {"pair_id", pair.pair_id}};
    if (!s.question) {
      e["result"] = "QUESTION_REJECT";
      e["error"] = s.question_error;
    } else {
      e["question"] = s.question->text;
      e["answers"] = {synth::to_json(s.attempts.first.extracted), synth::to_json(s.attempts.second.extracted)};
      const auto record = synth::accept_sample(*s.question, s.attempts, pair, counter);
      if (!record) {
        e["result"] = "DISAGREE";
      } else {
        const auto verdict = synth::post_filter(*record, cfg_.synth_filters, questions);
        e["post_filter"] = filters::to_json(verdict);
        if (verdict.passed() || verdict.reason != filters::RejectReason::Duplicate) {
          e["question_key"] = synth::question_key(record->question).hex;
        }
        e["result"] = verdict.passed() ? "PROBLEM" : "POST_REJECT";
        if (verdict.passed()) e["record"] = synth::to_json(*record);
      }
    }
    journal.append(e.dump());
    ++p.cp.solved;
    ++committed_here;
    if (p.cp.solved % cfg_.checkpoint_every == 0) {
      journal.sync();
      save_checkpoint(p);
    }
    if (halt_ && halt_->stage == Stage::Solve && halt_->after > 0 && committed_here == halt_->after) {
      journal.sync();
      throw HaltRequested("halted during SOLVE after " + std::to_string(committed_here) + " item(s)");
    }
  };

  ordered_stream<Solved>(p.cp.solved, pair_list.size(), cfg_.synth.workers, cfg_.synth.workers * 4, produce, commit);
  journal.sync();
  log(p.cp.name + ": solved " + std::to_string(p.cp.solved) + " question(s), pass rate " +
      std::to_string(counter.pass_rate()));
}

void Pipeline::write(Pass& p) {
  std::error_code ec;
  fs::create_directories(p.out, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + p.out.string() + ": " + ec.message());

  pairs::DatasetManifest manifest;
  manifest.name = cfg_.dataset_name + "-" + p.cp.name;
  manifest.split = pairs::Split::Train;
  manifest.config_digest = digest_;
  const auto written = pairs::write_dataset(journal_pairs(p.journal_file()), manifest, p.out, cfg_.emission_order);
  log(p.cp.name + ": wrote " + std::to_string(written.record_count) + " pair(s) to " + p.out.string());

  std::vector<std::string> audit;
  for (const auto& e : read_lines(p.journal_file())) {
    for (const auto& a : e.value("audit", nlohmann::json::array())) audit.push_back(a.dump());
  }
  write_ndjson(p.out / "audit.ndjson", audit);

  if (p.cp.kind != "SYNTH") return;
  std::vector<std::pair<std::string, nlohmann::json>> records;
  std::size_t agreements = 0, solved = 0;
  for (const auto& e : read_lines(p.solve_file())) {
    const std::string result = e.value("result", "");
    if (result != "QUESTION_REJECT") ++solved;
    if (result == "PROBLEM" || result == "POST_REJECT") ++agreements;
    if (result == "PROBLEM") records.emplace_back(sha256(e["record"]["record_id"].get<std::string>()).hex, e["record"]);
  }
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> lines;
  std::map<std::string, std::size_t> per_kind;
  std::set<std::string> images;
  for (const auto& [k, r] : records) {
    lines.push_back(r.dump());
    ++per_kind[r["answer_kind"].get<std::string>()];
    images.insert(r["image_file"].get<std::string>());
  }
  const std::string problems_file = cfg_.dataset_name + "-" + p.cp.name + ".problems.jsonl";
  write_ndjson(p.out / problems_file, lines);
  nlohmann::json files = nlohmann::json::array({problems_file});
  for (const auto& f : images) files.push_back(f);
  const nlohmann::json problem_manifest{
      {"name", cfg_.dataset_name + "-" + p.cp.name + "-problems"},
      {"split", "TRAIN"},
      {"record_count", lines.size()},
      {"per_answer_kind", per_kind},
      {"config_digest", digest_},
      {"solution_pass_rate", solved == 0 ? 0.0 : static_cast<double>(agreements) / static_cast<double>(solved)},
      {"files", files}};
  atomic_write_file(p.out / (cfg_.dataset_name + "-" + p.cp.name + ".problems.manifest.json"),
                    problem_manifest.dump(2) + "\n");
}

RoundStats Pipeline::stats(Pass& p) {
  RoundStats s;
  s.name = p.cp.name;
  s.kind = p.cp.kind;
  s.round_index = p.cp.round_index;
  std::vector<std::string> new_keys;
  for (const auto& e : read_lines(p.journal_file())) {
    ++s.inputs;
    const std::string result = e.value("result", "");
    if (result == "GEN_FAIL") {
      ++s.generation_failures;
      continue;
    }
    const Dialect d = modelgate::parse_dialect(e["code"]["dialect"].get<std::string>());
    ++s.attempted[d];
    if (result == "RENDER_FAIL") {
      ++s.render_failures[render::parse_render_status(e["render_status"].get<std::string>())];
      continue;
    }
    ++s.rendered_ok[d];
    s.chain.add(filters::verdict_from_json(e["audit"].back()));
    if (e.contains("dedup_key")) new_keys.push_back(e["dedup_key"].get<std::string>());
    if (result == "HOLDOUT") ++s.holdout_rejects;
    if (result == "PAIR") ++s.pairs_emitted;
  }
  if (p.cp.kind == "SYNTH") {
    for (const auto& e : read_lines(p.solve_file())) {
      const std::string result = e.value("result", "");
      if (result == "QUESTION_REJECT") {
        ++s.question_rejects[e.value("error", "UNKNOWN")];
        continue;
      }
      ++s.questions_crafted;
      if (result == "DISAGREE") {
        ++s.disagreements;
        continue;
      }
      ++s.agreements;
      s.post_filter.add(filters::verdict_from_json(e["post_filter"]));
      if (result == "PROBLEM") ++s.problems_emitted;
    }
  }
  s.wall_ms = p.cp.wall_ms;
  if (!s.conserved()) throw Error(ErrorCode::CountMismatch, p.cp.name + ": " + s.conservation_error());

  write_state(p.out / "stats.json", to_json(s));
  auto hist = history();
  auto it = std::find_if(hist.begin(), hist.end(), [&](const RoundStats& h) { return h.name == s.name; });
  if (it == hist.end()) {
    hist.push_back(s);
  } else {
    *it = s;
  }
  nlohmann::json hj = nlohmann::json::array();
  for (const auto& h : hist) hj.push_back(to_json(h));
  write_state(cfg_.paths.state_dir / "history.json", hj);

  // Later passes dedup against everything kept so far.
  filters::DedupStore global;
  const fs::path keys = cfg_.paths.state_dir / "dedup.keys";
  global.load(keys);
  for (const auto& k : new_keys) global.admit(ContentDigest{"sha256", k});
  try {
    global.save(keys);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CheckpointIoFailure, std::string("saving dedup keys: ") + e.what());
  }
  log(p.cp.name + ": " + std::to_string(s.pairs_emitted) + " pair(s), success rate " +
      std::to_string(s.overall_success_rate()));
  return s;
}

K12Summary Pipeline::run_k12(const fs::path& problems_file) {
  const auto problems = k12::load_raw_problems(problems_file);
  auto ocr = build_ocr(cfg_);
  k12::PipelineOptions opts;
  opts.classify = cfg_.classify;
  opts.augment.endpoint_id = cfg_.roles.k12;
  opts.workers = cfg_.k12_workers;
  const auto outcomes = k12::process_problems(problems, k12::catalog_lookup(catalog()), *ocr, *gateway_, opts);

  K12Summary sum;
  sum.source_file = problems_file.filename().string();
  sum.ingested = problems.size();
  std::vector<std::string> processed, rejects;
  for (const auto& o : outcomes) {
    if (o.processed) {
      ++sum.admitted;
      if (o.processed->ocr_flagged) ++sum.ocr_flagged;
      processed.push_back(k12::to_json(*o.processed).dump());
    } else {
      ++sum.rejected;
      ++sum.rejected_by_reason[std::string(filters::to_string(o.verdict.reason.value_or(filters::RejectReason::SchemaInvalid)))];
      nlohmann::json r = filters::to_json(o.verdict);
      r["problem_id"] = o.problem_id;
      rejects.push_back(r.dump());
    }
  }
  const fs::path out = cfg_.paths.output_dir / "k12";
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out.string() + ": " + ec.message());
  const std::string stem = problems_file.stem().string();
  write_ndjson(out / (stem + ".processed.jsonl"), processed);
  write_ndjson(out / (stem + ".rejects.jsonl"), rejects);
  sum.files = {stem + ".processed.jsonl", stem + ".rejects.jsonl", stem + ".stats.json"};
  const nlohmann::json stats{{"source_file", sum.source_file},       {"ingested", sum.ingested},
                             {"admitted", sum.admitted},             {"rejected", sum.rejected},
                             {"rejected_by_reason", sum.rejected_by_reason}, {"ocr_flagged", sum.ocr_flagged}};
  atomic_write_file(out / (stem + ".stats.json"), stats.dump(2) + "\n");
  return sum;
}

}  // namespace figforge::orchestrator
