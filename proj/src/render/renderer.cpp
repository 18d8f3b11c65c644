#include "figforge/render/renderer.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/common/text.hpp"

namespace figforge::render {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kPlotOutput = "__figforge_out.png";
constexpr int kPlotSyntaxExit = 3;

std::string base_path() {
  const char* p = std::getenv("PATH");
  return p ? p : "/usr/local/bin:/usr/bin:/bin";
}

void append_log(std::string& log, std::string_view chunk, std::size_t cap) {
  if (log.size() >= cap) return;
  log.append(chunk.substr(0, cap - log.size()));
}

bool is_preamble_line(std::string_view line) {
  line = text::trim(line);
  for (std::string_view p : {"\\usepackage", "\\usetikzlibrary", "\\usepgfplotslibrary", "\\RequirePackage"}) {
    if (line.substr(0, p.size()) == p) return true;
  }
  return false;
}

}  // namespace

std::string standalone_document(const std::string& code, const std::string& preamble) {
  if (code.find("\\documentclass") != std::string::npos) return code;
  std::string extra_preamble;
  std::string body;
  for (const auto& line : text::split_lines(code)) {
    if (is_preamble_line(line)) {
      extra_preamble += line + "\n";
    } else {
      body += line + "\n";
    }
  }
  if (body.find("\\begin{tikzpicture}") == std::string::npos) {
    body = "\\begin{tikzpicture}\n" + body + "\\end{tikzpicture}\n";
  }
  return "\\documentclass[border=2pt]{standalone}\n\\usepackage{tikz}\n" + preamble + extra_preamble +
         "\\begin{document}\n" + body + "\\end{document}\n";
}

std::string plot_driver_script() {
  return R"PY(import os
import sys
import traceback

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.figure import Figure

OUT = os.path.join(os.getcwd(), "__figforge_out.png")
DPI = int(sys.argv[2])
_orig_savefig = Figure.savefig
_state = {"saved": False}


def _forced_savefig(self, *args, **kwargs):
    kwargs.pop("fname", None)
    kwargs["format"] = "png"
    kwargs.setdefault("dpi", DPI)
    _orig_savefig(self, OUT, *args[1:], **kwargs)
    _state["saved"] = True


def _show(*args, **kwargs):
    if plt.get_fignums():
        plt.gcf().savefig(OUT)


Figure.savefig = _forced_savefig
plt.show = _show

with open(sys.argv[1], encoding="utf-8") as fh:
    source = fh.read()
try:
    code = compile(source, "figure_code.py", "exec")
except (SyntaxError, ValueError):
    traceback.print_exc()
    sys.exit(3)

try:
    exec(code, {"__name__": "__main__", "__file__": "figure_code.py"})
except SystemExit as exc:
    if exc.code not in (0, None):
        print("script exited with", exc.code, file=sys.stderr)
        sys.exit(4)
except BaseException:
    traceback.print_exc()
    sys.exit(4)

if not _state["saved"] and plt.get_fignums():
    plt.gcf().savefig(OUT)
)PY";
}

void attach_png(RenderOutcome& outcome, std::vector<std::uint8_t> png) {
  try {
    const Image img = decode_image(png);
    if (img.empty()) throw Error(ErrorCode::DecodeFailure, "empty raster");
    corpus::ImageAsset asset = corpus::make_asset(img, corpus::SourceTag::Synthesized, "", {});
    asset.kind = corpus::AssetKind::Figure;
    outcome.image = std::move(asset);
    outcome.png = std::move(png);
    outcome.status = RenderStatus::Success;
  } catch (const Error& e) {
    outcome.status = RenderStatus::EmptyOutput;
    outcome.image.reset();
    outcome.png.clear();
    outcome.log += std::string("\n[figforge] rendered output unusable: ") + e.what();
  }
}

// ---- toolchain ----

ToolchainRenderer::ToolchainRenderer(ToolchainConfig cfg) : cfg_(std::move(cfg)) {}

bool ToolchainRenderer::tex_available() const {
  return !find_executable(cfg_.tex_compiler).empty() &&
         (cfg_.rasterizer.empty() || !find_executable(cfg_.rasterizer.front()).empty());
}

bool ToolchainRenderer::interpreter_available() const { return !find_executable(cfg_.interpreter).empty(); }

ProcessLimits ToolchainRenderer::limits_for(std::chrono::milliseconds budget) const {
  ProcessLimits l;
  l.timeout = std::max(budget, std::chrono::milliseconds(1));
  l.memory_bytes = cfg_.memory_bytes;
  l.isolate_network = cfg_.isolate_network;
  l.output_cap = cfg_.log_cap;
  return l;
}

RenderOutcome ToolchainRenderer::execute(const RenderJob& job) {
  const fs::path root = job.scratch_root.empty() ? cfg_.scratch_root : job.scratch_root;
  ScopedDirectory workdir(make_unique_directory(root, "job-"));
  return job.code.dialect == Dialect::Tikz ? run_tikz(job, workdir.path()) : run_plot(job, workdir.path());
}

RenderOutcome ToolchainRenderer::run_tikz(const RenderJob& job, const fs::path& workdir) {
  RenderOutcome out;
  out.code_id = job.code.code_id;
  out.dialect = job.code.dialect;
  out.outcome_id = outcome_id_for(job.code);
  const auto started = std::chrono::steady_clock::now();
  const auto deadline = started + std::chrono::milliseconds(static_cast<long long>(job.timeout_s * 1000.0));
  auto remaining = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  };
  auto finish = [&](RenderStatus s) {
    out.status = s;
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return out;
  };

  atomic_write_file(workdir / "job.tex", standalone_document(job.code.text, cfg_.tex_preamble));
  const std::map<std::string, std::string> env{
      {"PATH", base_path()},       {"HOME", workdir.string()},  {"TEXMFOUTPUT", workdir.string()},
      {"openin_any", "p"},         {"openout_any", "p"},        {"shell_escape", "f"},
      {"LANG", "C.UTF-8"},
  };

  const ProcessResult tex = run_process(
      {cfg_.tex_compiler, "-interaction=nonstopmode", "-halt-on-error", "-no-shell-escape", "job.tex"}, workdir,
      env, limits_for(remaining()));
  append_log(out.log, tex.output, cfg_.log_cap);
  if (tex.spawn_failed) throw Error(ErrorCode::SandboxSetupFailure, tex.output);
  if (tex.timed_out) return finish(RenderStatus::Timeout);
  if (!tex.ok()) return finish(RenderStatus::CompileFail);
  if (!fs::exists(workdir / "job.pdf") || fs::file_size(workdir / "job.pdf") == 0) {
    return finish(RenderStatus::EmptyOutput);
  }

  std::vector<std::string> argv;
  for (const auto& a : cfg_.rasterizer) {
    if (a == "{dpi}") {
      argv.push_back(std::to_string(job.raster_dpi));
    } else if (a == "{pdf}") {
      argv.push_back("job.pdf");
    } else if (a == "{out}") {
      argv.push_back("page");
    } else {
      argv.push_back(a);
    }
  }
  const ProcessResult ras = run_process(argv, workdir, env, limits_for(remaining()));
  append_log(out.log, ras.output, cfg_.log_cap);
  if (ras.spawn_failed) throw Error(ErrorCode::SandboxSetupFailure, ras.output);
  if (ras.timed_out) return finish(RenderStatus::Timeout);
  if (!ras.ok()) return finish(RenderStatus::RuntimeFail);
  if (!fs::exists(workdir / "page.png")) return finish(RenderStatus::EmptyOutput);
  attach_png(out, read_file_bytes(workdir / "page.png"));
  return finish(out.status);
}

RenderOutcome ToolchainRenderer::run_plot(const RenderJob& job, const fs::path& workdir) {
  RenderOutcome out;
  out.code_id = job.code.code_id;
  out.dialect = job.code.dialect;
  out.outcome_id = outcome_id_for(job.code);
  const auto started = std::chrono::steady_clock::now();
  auto finish = [&](RenderStatus s) {
    out.status = s;
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return out;
  };

  atomic_write_file(workdir / "figure_code.py", job.code.text);
  atomic_write_file(workdir / "__figforge_driver.py", plot_driver_script());
  const std::map<std::string, std::string> env{
      {"PATH", base_path()},
      {"HOME", workdir.string()},
      {"MPLBACKEND", "Agg"},
      {"MPLCONFIGDIR", (workdir / ".mplconfig").string()},
      {"OPENBLAS_NUM_THREADS", "1"},
      {"OMP_NUM_THREADS", "1"},
      {"PYTHONDONTWRITEBYTECODE", "1"},
      {"LANG", "C.UTF-8"},
  };
  const ProcessResult py = run_process(
      {cfg_.interpreter, "-B", "__figforge_driver.py", "figure_code.py", std::to_string(job.raster_dpi)}, workdir,
      env, limits_for(std::chrono::milliseconds(static_cast<long long>(job.timeout_s * 1000.0))));
  append_log(out.log, py.output, cfg_.log_cap);
  if (py.spawn_failed) throw Error(ErrorCode::SandboxSetupFailure, py.output);
  if (py.timed_out) return finish(RenderStatus::Timeout);
  if (py.term_signal == 0 && py.exit_code == kPlotSyntaxExit) return finish(RenderStatus::CompileFail);
  if (!py.ok()) return finish(RenderStatus::RuntimeFail);
  const fs::path png = workdir / kPlotOutput;
  if (!fs::exists(png) || fs::file_size(png) == 0) return finish(RenderStatus::EmptyOutput);
  attach_png(out, read_file_bytes(png));
  return finish(out.status);
}

// ---- stub ----

Image stub_figure(const ContentDigest& code_digest) {
  constexpr std::uint32_t kSize = 96;
  Image img(kSize, kSize);
  auto byte = [&](std::size_t i) {
    return static_cast<std::uint32_t>(std::stoi(code_digest.hex.substr((2 * i) % 64, 2), nullptr, 16));
  };
  // Three vertices inside a margin, joined by 3-px strokes.
  std::uint32_t xs[3], ys[3];
  for (int v = 0; v < 3; ++v) {
    xs[v] = 10 + byte(2 * v) % (kSize - 20);
    ys[v] = 10 + byte(2 * v + 1) % (kSize - 20);
  }
  const std::uint8_t ink = static_cast<std::uint8_t>(byte(6) % 64);
  for (int e = 0; e < 3; ++e) {
    const int x0 = static_cast<int>(xs[e]), y0 = static_cast<int>(ys[e]);
    const int x1 = static_cast<int>(xs[(e + 1) % 3]), y1 = static_cast<int>(ys[(e + 1) % 3]);
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const int x = x0 + (x1 - x0) * s / steps;
      const int y = y0 + (y1 - y0) * s / steps;
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) img.set(x + dx, y + dy, ink, ink, ink);
      }
    }
  }
  // A filled corner block keeps the dispersion well clear of the blank and
  // near-white thresholds even when the three vertices nearly coincide.
  for (std::uint32_t y = 0; y < 12; ++y) {
    for (std::uint32_t x = 0; x < 12; ++x) img.set(kSize - 1 - x, kSize - 1 - y, ink, ink, ink);
  }
  return img;
}

void StubRenderer::set(const std::string& code_text, Entry entry) {
  std::lock_guard lock(mu_);
  table_[sha256(code_text).hex] = std::move(entry);
}

RenderOutcome StubRenderer::execute(const RenderJob& job) {
  const std::size_t now = ++active_;
  std::size_t peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& a;
    ~Leave() { --a; }
  } leave{active_};
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  const ContentDigest d = sha256(job.code.text);
  RenderOutcome out;
  out.code_id = job.code.code_id;
  out.dialect = job.code.dialect;
  out.outcome_id = outcome_id_for(job.code);
  Entry entry;
  {
    std::lock_guard lock(mu_);
    if (auto it = table_.find(d.hex); it != table_.end()) entry = it->second;
  }
  out.log = entry.log;
  out.wall_ms = entry.wall_ms;
  if (entry.status == RenderStatus::Success) {
    attach_png(out, encode_png(stub_figure(d)));
  } else {
    out.status = entry.status;
  }
  return out;
}

std::map<std::string, StubRenderer::Entry> stub_table_from_json(const nlohmann::json& j) {
  std::map<std::string, StubRenderer::Entry> table;
  for (const auto& [digest, e] : j.items()) {
    StubRenderer::Entry entry;
    entry.status = parse_render_status(e.at("status").get<std::string>());
    entry.log = e.value("log", "");
    entry.wall_ms = e.value("wall_ms", 1.0);
    table[digest] = std::move(entry);
  }
  return table;
}

// ---- dispatch ----

RenderOutcome render(const RenderJob& job, Renderer& renderer, const PrecheckTable& precheck) {
  const PrecheckResult pre = precheck.check(job.code);
  if (!pre.pass) {
    RenderOutcome out;
    out.code_id = job.code.code_id;
    out.dialect = job.code.dialect;
    out.outcome_id = outcome_id_for(job.code);
    out.status = RenderStatus::ForbiddenAccess;
    out.log = pre.reason;
    return out;
  }
  return renderer.execute(job);
}

RenderPool::RenderPool(Renderer& renderer, const PrecheckTable& precheck, std::size_t width)
    : renderer_(renderer), precheck_(precheck), gate_(width) {}

RenderOutcome RenderPool::run_one(const RenderJob& job) {
  ConcurrencyGate::Hold hold(gate_);
  return render(job, renderer_, precheck_);
}

std::vector<RenderOutcome> RenderPool::run(const std::vector<RenderJob>& jobs) {
  std::vector<RenderOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), gate_.limit(), [&](std::size_t i) { outcomes[i] = run_one(jobs[i]); });
  return outcomes;
}

}  // namespace figforge::render
