#include <doctest.h>

#include <set>
#include <thread>

#include "figforge/common/error.hpp"
#include "figforge/render/precheck.hpp"
#include "figforge/render/renderer.hpp"
#include "figforge/render/subprocess.hpp"
#include "support.hpp"

using namespace figforge;
using namespace figforge::render;
using testsupport::TempDir;

namespace {

std::set<std::string> snapshot(const fs::path& root) {
  std::set<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) out.insert(fs::relative(e.path(), root).string());
  return out;
}

RenderOutcome outcome_with(RenderStatus s, Dialect d = Dialect::Tikz) {
  RenderOutcome o;
  o.status = s;
  o.dialect = d;
  return o;
}

bool have_matplotlib() {
  static const bool ok = [] {
    if (find_executable("python3").empty()) return false;
    TempDir t;
    const auto r = run_process({"python3", "-c", "import matplotlib"}, t.path,
                               {{"PATH", "/usr/local/bin:/usr/bin:/bin"}},
                               ProcessLimits{std::chrono::milliseconds(20000), 0, false, 4096});
    return r.ok();
  }();
  return ok;
}

const char* kGoodPlot =
    "import matplotlib.pyplot as plt\n"
    "fig, ax = plt.subplots(figsize=(2, 2))\n"
    "ax.plot([0, 1, 2], [0, 1, 0], color='black')\n"
    "plt.savefig('../../escape.png')\n";

}  // namespace

TEST_CASE("precheck table") {
  const PrecheckTable table;
  CHECK_FALSE(static_precheck(testsupport::tikz("\\includegraphics{../photo.png}"), table).pass);
  CHECK_FALSE(static_precheck(testsupport::tikz("\\input{secrets}"), table).pass);
  CHECK(static_precheck(testsupport::tikz("\\draw (0,0) -- (1,1);"), table).pass);
  CHECK(static_precheck(testsupport::python("import matplotlib.pyplot as plt\nplt.plot([1,2])\nplt.savefig('a.png')"),
                        table)
            .pass);
  const auto csv = static_precheck(testsupport::python("import pandas as pd\ndf = pd.read_csv('data.csv')"), table);
  CHECK_FALSE(csv.pass);
  CHECK(csv.reason.find("read_csv") != std::string::npos);
  CHECK_FALSE(static_precheck(testsupport::python("d = open('data.csv').read()"), table).pass);
  CHECK_FALSE(static_precheck(testsupport::python("import urllib.request"), table).pass);
  // Rules are per dialect.
  CHECK(static_precheck(testsupport::tikz("\\node {open(x)};"), table).pass);
}

TEST_CASE("precheck rules from JSON") {
  const auto rules = precheck_rules_from_json(
      nlohmann::json::parse(R"([{"dialect": "PLOTSCRIPT", "name": "no-eval", "pattern": "\\beval\\s*\\("}])"));
  const PrecheckTable table(rules);
  CHECK_FALSE(table.check(testsupport::python("eval('1')")).pass);
  CHECK(table.check(testsupport::python("open('x')")).pass);
  CHECK_THROWS_AS(PrecheckTable({{Dialect::Tikz, "bad", "("}}), Error);
}

TEST_CASE("forbidden code never reaches the renderer") {
  StubRenderer stub;
  const PrecheckTable table;
  RenderJob job{testsupport::tikz("\\includegraphics{../photo.png}"), 5.0, 100, {}};
  const auto o = render::render(job, stub, table);
  CHECK(o.status == RenderStatus::ForbiddenAccess);
  CHECK_FALSE(o.image.has_value());
  CHECK(stub.peak_concurrency() == 0);
}

TEST_CASE("success_rate") {
  CHECK(success_rate({outcome_with(RenderStatus::Success), outcome_with(RenderStatus::CompileFail)}).overall == 0.5);
  CHECK(success_rate({outcome_with(RenderStatus::Success), outcome_with(RenderStatus::Success)}).overall == 1.0);
  std::vector<RenderOutcome> fixture;
  for (int i = 0; i < 200; ++i) fixture.push_back(outcome_with(i < 93 ? RenderStatus::Success : RenderStatus::CompileFail));
  const auto r = success_rate(fixture);
  CHECK(r.overall == doctest::Approx(0.465).epsilon(1e-12));
  CHECK(r.succeeded.at(Dialect::Tikz) == 93);
  CHECK(r.attempted.at(Dialect::Tikz) == 200);
  std::vector<RenderOutcome> mixed{outcome_with(RenderStatus::Success, Dialect::Tikz),
                                   outcome_with(RenderStatus::Timeout, Dialect::PlotScript),
                                   outcome_with(RenderStatus::Success, Dialect::PlotScript)};
  const auto m = success_rate(mixed);
  CHECK(m.per_dialect.at(Dialect::Tikz) == 1.0);
  CHECK(m.per_dialect.at(Dialect::PlotScript) == 0.5);
  try {
    success_rate({});
    FAIL("expected EmptyList");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyList);
  }
}

TEST_CASE("stub renderer table and default figure") {
  StubRenderer stub;
  const auto bad = testsupport::tikz("\\undefinedmacro");
  stub.set(bad.text, {RenderStatus::CompileFail, "! Undefined control sequence.", 2.0});
  const PrecheckTable table;
  const auto fail = render::render({bad, 5.0, 100, {}}, stub, table);
  CHECK(fail.status == RenderStatus::CompileFail);
  CHECK(fail.log.find("Undefined control sequence") != std::string::npos);
  const auto good = testsupport::tikz("\\draw (0,0) -- (2,1);");
  const auto ok = render::render({good, 5.0, 100, {}}, stub, table);
  REQUIRE(ok.status == RenderStatus::Success);
  CHECK_FALSE(ok.png.empty());
  REQUIRE(ok.image.has_value());
  CHECK(ok.image->width_px > 0);
  CHECK(ok.code_id == good.code_id);
  CHECK(ok.outcome_id == outcome_id_for(good));
  CHECK(render::render({good, 5.0, 100, {}}, stub, table).png == ok.png);

  const auto table_json = nlohmann::json::parse(R"({"abc": {"status": "TIMEOUT", "log": "slow", "wall_ms": 7}})");
  const auto entries = stub_table_from_json(table_json);
  CHECK(entries.at("abc").status == RenderStatus::Timeout);
}

TEST_CASE("render pool bounds concurrency and keeps job order") {
  StubRenderer stub;
  stub.set_latency(std::chrono::milliseconds(3));
  const PrecheckTable table;
  RenderPool pool(stub, table, 4);
  std::vector<RenderJob> jobs;
  for (int i = 0; i < 60; ++i) jobs.push_back({testsupport::tikz("\\draw (0,0) -- (" + std::to_string(i) + ",1);"), 5.0, 100, {}});
  const auto out = pool.run(jobs);
  REQUIRE(out.size() == jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) CHECK(out[i].code_id == jobs[i].code.code_id);
  CHECK(pool.peak_concurrency() <= 4);
  CHECK(stub.peak_concurrency() <= 4);
  CHECK(stub.peak_concurrency() >= 2);
}

TEST_CASE("subprocess runner") {
  TempDir t;
  const std::map<std::string, std::string> env{{"PATH", "/usr/bin:/bin"}};
  SUBCASE("exit code and output") {
    const auto r = run_process({"sh", "-c", "echo hi; exit 3"}, t.path, env, {});
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("hi") != std::string::npos);
    CHECK_FALSE(r.ok());
  }
  SUBCASE("timeout kills the process group") {
    const auto r = run_process({"sh", "-c", "sleep 30 & sleep 30"}, t.path, env,
                               ProcessLimits{std::chrono::milliseconds(300), 0, false, 1024});
    CHECK(r.timed_out);
    CHECK(r.wall_ms >= 300);
    CHECK(r.wall_ms < 5000);
  }
  SUBCASE("environment is exactly what was given") {
    const auto r = run_process({"sh", "-c", "env"}, t.path, {{"PATH", "/usr/bin:/bin"}, {"ONLY", "1"}}, {});
    CHECK(r.output.find("ONLY=1") != std::string::npos);
    CHECK(r.output.find("HOME=") == std::string::npos);
  }
  SUBCASE("missing program") {
    const auto r = run_process({"no-such-program-figforge"}, t.path, env, {});
    CHECK(r.spawn_failed);
  }
  CHECK(live_subprocesses() == 0);
}

TEST_CASE("standalone document wrapping") {
  const std::string bare = standalone_document("\\draw (0,0) -- (1,1);", "");
  CHECK(bare.find("\\begin{tikzpicture}") != std::string::npos);
  CHECK(bare.find("\\documentclass") != std::string::npos);
  const std::string env = standalone_document("\\begin{tikzpicture}\\draw (0,0);\\end{tikzpicture}", "");
  CHECK(env.find("\\begin{tikzpicture}\\draw") != std::string::npos);
  const std::string full = "\\documentclass{article}\\begin{document}x\\end{document}";
  CHECK(standalone_document(full, "") == full);
}

TEST_CASE("plot scripts through the real interpreter") {
  if (!have_matplotlib()) {
    MESSAGE("python3 with matplotlib not available; skipped");
    return;
  }
  TempDir t;
  ToolchainConfig cfg;
  cfg.scratch_root = t / "scratch";
  ToolchainRenderer renderer(cfg);
  const PrecheckTable table;
  const auto before = snapshot(t.path);

  const auto ok = render::render({testsupport::python(kGoodPlot), 30.0, 50, {}}, renderer, table);
  CHECK(ok.status == RenderStatus::Success);
  CHECK_FALSE(ok.png.empty());

  const auto syntax = render::render({testsupport::python("plt.plot([1,2]\n"), 30.0, 50, {}}, renderer, table);
  CHECK(syntax.status == RenderStatus::CompileFail);

  const auto runtime = render::render({testsupport::python("raise ValueError('nope')"), 30.0, 50, {}}, renderer, table);
  CHECK(runtime.status == RenderStatus::RuntimeFail);
  CHECK(runtime.log.find("ValueError") != std::string::npos);

  const auto empty = render::render({testsupport::python("x = 1 + 1"), 30.0, 50, {}}, renderer, table);
  CHECK(empty.status == RenderStatus::EmptyOutput);

  const auto loop = render::render({testsupport::python("while True:\n    pass"), 2.0, 50, {}}, renderer, table);
  CHECK(loop.status == RenderStatus::Timeout);
  CHECK(loop.wall_ms >= 2000);
  CHECK(loop.wall_ms < 2000 + 5000);

  // Workdirs are gone and nothing was written next to them.
  auto after = snapshot(t.path);
  after.erase("scratch");
  CHECK(after == before);
  CHECK(snapshot(cfg.scratch_root).empty());
  CHECK(live_subprocesses() == 0);
}

TEST_CASE("TeX rendering") {
  ToolchainRenderer renderer;
  if (!renderer.tex_available()) {
    MESSAGE("no TeX toolchain; skipped");
    return;
  }
  TempDir t;
  const PrecheckTable table;
  const auto ok = render::render({testsupport::tikz("\\draw (0,0)--(1,1);"), 60.0, 100, t.path}, renderer, table);
  CHECK(ok.status == RenderStatus::Success);
  const auto bad = render::render({testsupport::tikz("\\undefinedfigforgemacro"), 60.0, 100, t.path}, renderer, table);
  CHECK(bad.status == RenderStatus::CompileFail);
}
