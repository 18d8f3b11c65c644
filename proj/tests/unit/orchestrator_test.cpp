#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <set>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/common/text.hpp"
#include "figforge/orchestrator/pipeline.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::orchestrator;
using testsupport::TempDir;

namespace {

std::vector<nlohmann::json> ndjson(const fs::path& p) {
  std::vector<nlohmann::json> out;
  for (const auto& line : text::split_lines(read_text_file(p))) {
    if (!text::trim(line).empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// A corpus of n distinct figure PNGs plus a stub-mode config rooted in a
// temp dir.
struct Workspace {
  TempDir dir;
  PipelineConfig cfg;

  explicit Workspace(std::size_t n, std::uint32_t salt = 100) {
    for (std::size_t i = 0; i < n; ++i) {
      testsupport::write_png(dir / ("imgs/f" + std::to_string(i) + ".png"),
                             testsupport::figure_image(96, 72, salt + static_cast<std::uint32_t>(i)));
    }
    cfg.paths.catalog = dir / "state/catalog.ndjson";
    cfg.paths.state_dir = dir / "state";
    cfg.paths.output_dir = dir / "out";
    cfg.seed = 7;
    cfg.checkpoint_every = 2;
    force_stub(cfg);
  }

  std::unique_ptr<Pipeline> pipeline() const { return std::make_unique<Pipeline>(cfg); }

  std::unique_ptr<Pipeline> ingested() const {
    auto p = pipeline();
    p->ingest(dir.path / "imgs", corpus::SourceTag::DatikzSeed);
    return p;
  }

  std::vector<nlohmann::json> dataset(const std::string& pass) const {
    return ndjson(dir / ("out/" + pass + "/" + cfg.dataset_name + "-" + pass + ".train.jsonl"));
  }
  std::vector<nlohmann::json> journal(const std::string& pass) const {
    return ndjson(dir / ("state/" + pass + "/journal.ndjson"));
  }
};

// Every output file except the wall-clock timing inside stats.json.
std::map<std::string, std::string> output_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    std::string body = read_text_file(e.path());
    if (e.path().filename() == "stats.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("wall_ms");
      body = j.dump();
    }
    files[rel] = body;
  }
  return files;
}

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" FIGFORGE_CLI "' -q " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config load, digest and round trip") {
  TempDir dir;
  atomic_write_file(dir / "a/cfg.json", std::string(R"({
    // comments are fine
    "seed": 3,
    "paths": {"state_dir": "st", "output_dir": "o"},
    "rounds": [{"round_index": 1, "dialect_mix": {"TIKZ": 0.25, "PLOTSCRIPT": 0.75}, "sample_cap": 5}],
    "filters": {"max_code_chars": 100}
  })"));
  auto cfg = load_config(dir / "a/cfg.json");
  CHECK(cfg.seed == 3);
  CHECK(cfg.paths.state_dir == dir / "a/st");
  CHECK(cfg.round(1).tikz_share == doctest::Approx(0.25));
  CHECK(cfg.round(1).sample_cap == 5);
  CHECK(cfg.round(2).sample_cap == cfg.round_defaults.sample_cap);
  CHECK(cfg.filters.max_code_chars == 100);

  fs::create_directories(dir / "b");
  fs::copy_file(dir / "a/cfg.json", dir / "b/cfg.json");
  auto moved = load_config(dir / "b/cfg.json");
  CHECK(moved.paths.state_dir != cfg.paths.state_dir);
  CHECK(config_digest(moved) == config_digest(cfg));
  CHECK(config_digest(config_from_json(to_json(cfg))) == config_digest(cfg));
  auto other = cfg;
  other.seed = 4;
  CHECK(config_digest(other) != config_digest(cfg));

  atomic_write_file(dir / "bad.json", std::string(R"({"filters": {"blank_std_threshold": -1}})"));
  try {
    load_config(dir / "bad.json");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
  atomic_write_file(dir / "bad2.json", std::string("{\"seed\": "));
  CHECK_THROWS_AS(load_config(dir / "bad2.json"), Error);

  PipelineConfig roles;
  roles.roles.specialist = "nowhere";
  CHECK_THROWS_AS(build_gateway(roles), Error);
}

TEST_CASE("stats conservation and report") {
  RoundStats s;
  s.name = "round-0";
  s.kind = "ROUND";
  s.inputs = 10;
  s.generation_failures = 1;
  s.attempted[Dialect::Tikz] = 9;
  s.rendered_ok[Dialect::Tikz] = 7;
  s.render_failures[render::RenderStatus::CompileFail] = 2;
  for (int i = 0; i < 5; ++i) s.chain.add(filters::FilterVerdict::pass());
  s.chain.add(filters::FilterVerdict::reject(filters::RejectReason::Duplicate));
  s.chain.add(filters::FilterVerdict::reject(filters::RejectReason::Blank));
  s.pairs_emitted = 5;
  CHECK(s.conserved());
  CHECK(s.overall_success_rate() == doctest::Approx(7.0 / 9.0));

  auto broken = s;
  broken.pairs_emitted = 4;
  CHECK(broken.conservation_error().find("chain passes") != std::string::npos);
  broken = s;
  broken.inputs = 11;
  CHECK_FALSE(broken.conserved());

  CHECK(round_stats_from_json(to_json(s)) == s);
  auto t = s;
  t.name = "round-1";
  t.round_index = 1;
  const auto rep = build_report({s, t});
  CHECK(rep.cumulative.inputs == 20);
  CHECK(report_from_json(to_json(rep)) == rep);
  const auto j = to_json(rep);
  for (const auto& row : j["rounds"]) {
    double total = row["shares"]["pass_pct"].get<double>();
    for (const auto& [k, v] : row["shares"]["reject_pct"].items()) total += v.get<double>();
    CHECK(total == doctest::Approx(100.0).epsilon(1e-12));
  }
  CHECK_FALSE(report_text(rep).empty());
  CHECK_THROWS_AS(build_report({}), Error);

  auto tampered = j;
  tampered["cumulative"]["inputs"] = 99;
  CHECK_THROWS_AS(report_from_json(tampered), Error);
}

TEST_CASE("halt points and checkpoints") {
  CHECK(parse_halt_point("PROCESS:25").stage == Stage::Process);
  CHECK(parse_halt_point("PROCESS:25").after == 25);
  CHECK(parse_halt_point("WRITE").after == 0);
  CHECK_THROWS(parse_halt_point("NOPE"));
  for (auto s : {Stage::None, Stage::Select, Stage::Process, Stage::Solve, Stage::Write, Stage::Stats}) {
    CHECK(parse_stage(to_string(s)) == s);
  }
  Checkpoint c{"round-2", "ROUND", 2, "abc", Stage::Process, 17, 0, 3.5};
  auto back = checkpoint_from_json(to_json(c));
  CHECK(back.name == c.name);
  CHECK(back.stage == Stage::Process);
  CHECK(back.processed == 17);
}

TEST_CASE("round over ten valid assets") {
  Workspace ws(10);
  auto p = ws.ingested();
  const auto s = p->run_round(0);
  CHECK(s.inputs == 10);
  CHECK(s.pairs_emitted == 10);
  CHECK(s.overall_success_rate() == 1.0);
  CHECK(s.conserved());
  const auto rows = ws.dataset("round-0");
  CHECK(rows.size() == 10);
  std::set<std::string> ids;
  for (const auto& r : rows) {
    ids.insert(r["pair_id"].get<std::string>());
    CHECK(fs::exists(ws.dir / ("out/round-0/" + r["image_file"].get<std::string>())));
  }
  CHECK(ids.size() == 10);
  CHECK(p->history().size() == 1);

  // Completed passes return their recorded stats.
  auto again = ws.pipeline()->run_round(0);
  again.wall_ms = s.wall_ms;
  CHECK(again == s);
  CHECK_FALSE(ws.pipeline()->resume());
}

TEST_CASE("renderer failing four of ten gives success rate 0.6") {
  Workspace probe(10);
  probe.ingested()->run_round(0);
  std::vector<std::string> codes;
  for (const auto& e : probe.journal("round-0")) codes.push_back(e["code"]["text"].get<std::string>());
  REQUIRE(codes.size() == 10);

  Workspace ws(10);
  for (int i = 0; i < 4; ++i) ws.cfg.render.stub_table[sha256(codes[i * 2]).hex] = {{"status", "COMPILE_FAIL"}};
  const auto s = ws.ingested()->run_round(0);
  CHECK(s.overall_success_rate() == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(s.render_failures.at(render::RenderStatus::CompileFail) == 4);
  CHECK(s.pairs_emitted == 6);
  CHECK(s.conserved());
  CHECK(ws.dataset("round-0").size() == 6);
}

TEST_CASE("translation pass") {
  Workspace probe(5);
  {
    auto p = probe.ingested();
    CHECK_THROWS_AS(p->run_translation_pass(0), Error);
    p->run_round(0);
    const auto s = p->run_translation_pass(0);
    CHECK(s.inputs == 5);
    CHECK(s.pairs_emitted == 5);
    CHECK(s.attempted.at(Dialect::PlotScript) == 5);
  }
  std::set<std::string> round_ids;
  for (const auto& r : probe.dataset("round-0")) round_ids.insert(r["pair_id"].get<std::string>());
  std::vector<std::string> translated;
  for (const auto& e : probe.journal("translate-0")) {
    REQUIRE(e.contains("pair"));
    CHECK(e["pair"]["code"]["dialect"] == "PLOTSCRIPT");
    CHECK(round_ids.count(e["pair"]["ancestor_pair_id"].get<std::string>()) == 1);
    CHECK(e["code"]["provenance"].contains("parent_code_id"));
    translated.push_back(e["code"]["text"].get<std::string>());
  }
  REQUIRE(translated.size() == 5);

  Workspace ws(5);
  for (int i : {1, 3}) ws.cfg.render.stub_table[sha256(translated[i]).hex] = {{"status", "RUNTIME_FAIL"}};
  auto p = ws.ingested();
  p->run_round(0);
  const auto s = p->run_translation_pass(0);
  CHECK(s.pairs_emitted == 3);
  CHECK(s.render_failures.at(render::RenderStatus::RuntimeFail) == 2);
  CHECK(s.conserved());
  const auto rows = ws.dataset("translate-0");
  CHECK(rows.size() == 3);
  for (const auto& r : rows) CHECK(r["dialect"] == "PLOTSCRIPT");
}

TEST_CASE("problem synthesis") {
  Workspace probe(4, 300);
  const auto s = probe.ingested()->run_problem_synthesis(0);
  CHECK(s.inputs == 4);
  CHECK(s.agreements == 4);
  CHECK(s.solution_pass_rate() == 1.0);
  CHECK(s.problems_emitted == 4);
  CHECK(s.conserved());
  const auto recs = ndjson(probe.dir / "out/synth-0/figforge-synth-0.problems.jsonl");
  CHECK(recs.size() == 4);
  for (const auto& r : recs) {
    CHECK(r["provenance"]["solvers"].size() == 2);
    CHECK(fs::exists(probe.dir / ("out/synth-0/" + r["image_file"].get<std::string>())));
  }
  const auto manifest =
      nlohmann::json::parse(read_text_file(probe.dir / "out/synth-0/figforge-synth-0.problems.manifest.json"));
  CHECK(manifest["solution_pass_rate"] == 1.0);

  std::vector<std::string> codes;
  for (const auto& e : probe.journal("synth-0")) {
    if (e.contains("pair")) codes.push_back(e["pair"]["code"]["text"].get<std::string>());
  }
  REQUIRE(codes.size() == 4);

  // A generalist that answers wrongly whenever it sees two of the four codes.
  Workspace ws(4, 300);
  EndpointConfig gen;
  gen.id = "gen";
  gen.stub_rules = nlohmann::json::array();
  for (int i : {0, 2}) gen.stub_rules.push_back({{"template", "SOLVE"}, {"contains", codes[i]}, {"response", "\\boxed{-1}"}});
  ws.cfg.endpoints.push_back(gen);
  ws.cfg.roles.generalist = "gen";
  const auto half = ws.ingested()->run_problem_synthesis(0);
  CHECK(half.agreements == 2);
  CHECK(half.disagreements == 2);
  CHECK(half.solution_pass_rate() == 0.5);
  CHECK(half.problems_emitted == 2);
  CHECK(half.conserved());
}

TEST_CASE("kill and resume mid-round matches an uninterrupted run") {
  Workspace straight(9);
  {
    auto p = straight.ingested();
    p->run_round(0);
    p->run_translation_pass(0);
  }
  const auto expected = output_tree(straight.dir / "out");

  for (const std::string halt : {"SELECT", "PROCESS:3", "PROCESS", "WRITE"}) {
    CAPTURE(halt);
    Workspace ws(9);
    {
      auto p = ws.ingested();
      p->set_halt(parse_halt_point(halt));
      CHECK_THROWS_AS(p->run_round(0), HaltRequested);
    }
    CHECK(fs::exists(ws.dir / "state/active.json"));
    auto p = ws.pipeline();
    auto resumed = p->resume();
    REQUIRE(resumed);
    CHECK(resumed->name == "round-0");
    CHECK(resumed->conserved());
    CHECK_FALSE(fs::exists(ws.dir / "state/active.json"));
    p->run_translation_pass(0);
    CHECK(output_tree(ws.dir / "out") == expected);
  }
}

TEST_CASE("a changed config cannot resume a pass") {
  Workspace ws(4);
  {
    auto p = ws.ingested();
    p->set_halt(parse_halt_point("PROCESS:1"));
    CHECK_THROWS_AS(p->run_round(0), HaltRequested);
  }
  ws.cfg.seed = 8;
  try {
    ws.pipeline()->resume();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
}

TEST_CASE("an earlier round cannot run after a later one") {
  Workspace ws(3);
  auto p = ws.ingested();
  p->run_round(1);
  try {
    p->run_round(0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigInvalid);
  }
  const auto rep = p->report();
  CHECK(rep.rounds.size() == 1);
}

TEST_CASE("k12 batch through the pipeline") {
  Workspace ws(0);
  testsupport::write_png(ws.dir / "k12img/fig.png", testsupport::figure_image(300, 200, 1));
  testsupport::write_png(ws.dir / "k12img/eq.png", testsupport::figure_image(200, 20, 2));
  auto p = ws.pipeline();
  const auto added = p->ingest(ws.dir / "k12img", corpus::SourceTag::K12).added;
  REQUIRE(added.size() == 2);
  std::string eq_id, fig_id;
  for (const auto& a : added) (a.height_px == 20 ? eq_id : fig_id) = a.asset_id;

  nlohmann::json a{{"problem_id", "a"}, {"question", "Find x."}, {"answer1", "3"}, {"image_refs", {fig_id, eq_id}}};
  nlohmann::json b{{"problem_id", "b"}, {"question", "Solve."}, {"answer1", "1"}, {"image_refs", {eq_id}}};
  nlohmann::json c{{"problem_id", "c"}, {"question", "Where?"}, {"image_refs", {"img-unknown"}}};
  atomic_write_file(ws.dir / "batch.jsonl", a.dump() + "\n" + b.dump() + "\n" + c.dump() + "\n");

  const auto sum = p->run_k12(ws.dir / "batch.jsonl");
  CHECK(sum.ingested == 3);
  CHECK(sum.admitted == 1);
  CHECK(sum.rejected == 2);
  CHECK(sum.rejected_by_reason.at("EQUATION_ONLY") == 1);
  CHECK(sum.rejected_by_reason.at("SCHEMA_INVALID") == 1);
  CHECK(sum.ocr_flagged == 1);  // the stub OCR table is empty
  const auto processed = ndjson(ws.dir / "out/k12/batch.processed.jsonl");
  REQUIRE(processed.size() == 1);
  CHECK(processed[0]["short_answers"] == nlohmann::json::array({"3"}));
  CHECK(ndjson(ws.dir / "out/k12/batch.rejects.jsonl").size() == 2);
  CHECK(fs::exists(ws.dir / "out/k12/batch.stats.json"));
}

TEST_CASE("command line exit codes") {
  Workspace ws(3);
  const auto d = ws.dir.path;
  const std::string imgs = "'" + (d / "imgs").string() + "'";
  CHECK(run_cli(d, "") == 2);
  CHECK(run_cli(d, "round --index notanumber") == 2);
  CHECK(run_cli(d, "--stub report") == 1);
  CHECK(run_cli(d, "--stub ingest --root /definitely/not/here") == 1);
  CHECK(run_cli(d, "--stub --seed 7 ingest --root " + imgs) == 0);
  CHECK(run_cli(d, "--stub --seed 7 --halt-at PROCESS:1 round --index 0") == 75);
  CHECK(run_cli(d, "--stub --seed 7 resume") == 0);
  CHECK(run_cli(d, "--stub --seed 7 report --json") == 0);
  CHECK(fs::exists(d / "out/round-0/stats.json"));
}

TEST_CASE("shipped example config loads") {
  const auto cfg = load_config(fs::path(FIGFORGE_RESOURCE_DIR) / "example_config.json");
  CHECK(cfg.endpoints.size() == 2);
  CHECK(cfg.roles.image_to_code == "codifier");
  CHECK(cfg.round(1).tikz_share == doctest::Approx(0.7));
  CHECK(cfg.filters.banned_keywords == filters::FilterConfig::default_banlist());
  auto stubbed = cfg;
  force_stub(stubbed);
  CHECK_NOTHROW(build_gateway(stubbed));
}
