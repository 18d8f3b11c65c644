#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/common/parallel.hpp"
#include "figforge/render/precheck.hpp"
#include "figforge/render/subprocess.hpp"
#include "figforge/render/types.hpp"

namespace figforge::render {

// Executes one job that already passed the static precheck.
class Renderer {
 public:
  virtual ~Renderer() = default;
  virtual RenderOutcome execute(const RenderJob& job) = 0;
};

struct ToolchainConfig {
  std::string tex_compiler = "pdflatex";
  /// Rasterizer argv; {dpi}, {pdf} and {out} (output path without extension)
  /// are substituted. The rasterizer must write {out}.png.
  std::vector<std::string> rasterizer = {"pdftoppm", "-png", "-r", "{dpi}", "-f", "1", "-l", "1",
                                         "-singlefile", "{pdf}", "{out}"};
  std::string interpreter = "python3";
  std::string tex_preamble = "\\usepackage{amsmath,amssymb}\n";
  std::filesystem::path scratch_root = std::filesystem::temp_directory_path() / "figforge-render";
  std::uint64_t memory_bytes = 1ull << 30;
  bool isolate_network = true;
  std::size_t log_cap = 64 * 1024;
};

/// Wraps TikZ code in a standalone document with tikz loaded. Code that is
/// already a full document is used as is; bare drawing commands are put
/// inside a tikzpicture environment.
std::string standalone_document(const std::string& code, const std::string& preamble);

/// The Python driver that runs a plot script with the Agg backend and routes
/// every figure save (and plt.show) to a fixed file in the workdir.
std::string plot_driver_script();

class ToolchainRenderer : public Renderer {
 public:
  explicit ToolchainRenderer(ToolchainConfig cfg = {});
  RenderOutcome execute(const RenderJob& job) override;

  /// True when the TeX compiler and rasterizer are on PATH.
  bool tex_available() const;
  bool interpreter_available() const;

 private:
  RenderOutcome run_tikz(const RenderJob& job, const std::filesystem::path& workdir);
  RenderOutcome run_plot(const RenderJob& job, const std::filesystem::path& workdir);
  ProcessLimits limits_for(std::chrono::milliseconds budget) const;

  ToolchainConfig cfg_;
};

// Deterministic renderer driven by a table keyed on the SHA-256 of the code
// text. Codes missing from the table succeed with a synthetic figure derived
// from the same digest.
class StubRenderer : public Renderer {
 public:
  struct Entry {
    RenderStatus status = RenderStatus::Success;
    std::string log;
    double wall_ms = 1.0;
  };

  StubRenderer() = default;
  explicit StubRenderer(std::map<std::string, Entry> table) : table_(std::move(table)) {}

  void set(const std::string& code_text, Entry entry);
  /// Sleep inside execute(), to make concurrency observable in tests.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  RenderOutcome execute(const RenderJob& job) override;

  std::size_t peak_concurrency() const { return peak_.load(); }

 private:
  std::map<std::string, Entry> table_;
  mutable std::mutex mu_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> peak_{0};
};

/// {"<sha256 of code text>": {"status": "COMPILE_FAIL", "log": "...", "wall_ms": 3}}
std::map<std::string, StubRenderer::Entry> stub_table_from_json(const nlohmann::json& j);

/// Synthetic figure a stub render produces for a code digest: dark strokes on
/// a white canvas.
Image stub_figure(const ContentDigest& code_digest);

/// Fills image, png and outcome metadata from rendered PNG bytes; downgrades to
/// EMPTY_OUTPUT when the bytes do not decode to a non-empty raster.
void attach_png(RenderOutcome& outcome, std::vector<std::uint8_t> png);

/// Static precheck, then execution. FORBIDDEN_ACCESS outcomes never reach the
/// renderer.
RenderOutcome render(const RenderJob& job, Renderer& renderer, const PrecheckTable& precheck);

// Runs render jobs on a fixed number of worker threads; at most `width` jobs
// execute at once.
class RenderPool {
 public:
  RenderPool(Renderer& renderer, const PrecheckTable& precheck, std::size_t width);

  /// Outcomes come back in job order.
  std::vector<RenderOutcome> run(const std::vector<RenderJob>& jobs);
  /// Single job through the shared width limit; callable from many threads.
  RenderOutcome run_one(const RenderJob& job);

  std::size_t width() const { return gate_.limit(); }
  std::size_t peak_concurrency() const { return gate_.peak(); }

 private:
  Renderer& renderer_;
  const PrecheckTable& precheck_;
  ConcurrencyGate gate_;
};

}  // namespace figforge::render
