#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/corpus/catalog.hpp"
#include "figforge/corpus/ingest.hpp"
#include "figforge/filters/dedup.hpp"
#include "figforge/orchestrator/config.hpp"
#include "figforge/orchestrator/stats.hpp"

namespace figforge::orchestrator {

// Macro stages of a pass, in execution order. SOLVE only exists for
// synthesis passes.
enum class Stage { None, Select, Process, Solve, Write, Stats };
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view name);

// Where to stop on purpose, to exercise resume. With `after` == 0 the run
// stops right after `stage` completes and is checkpointed; otherwise it stops
// after `after` items of that stage were committed in this invocation,
// without a final checkpoint, as an abrupt kill would.
struct HaltPoint {
  Stage stage = Stage::None;
  std::size_t after = 0;
};
/// "PROCESS" or "PROCESS:25".
HaltPoint parse_halt_point(std::string_view text);

class HaltRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::string name;
  std::string kind;  // ROUND | TRANSLATE | SYNTH
  std::uint32_t round_index = 0;
  std::string config_digest;
  Stage stage = Stage::None;  // last completed
  std::size_t processed = 0;  // committed PROCESS items
  std::size_t solved = 0;     // committed SOLVE items
  double wall_ms = 0.0;
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

struct K12Summary {
  std::string source_file;
  std::size_t ingested = 0;
  std::size_t admitted = 0;
  std::size_t rejected = 0;
  std::map<std::string, std::size_t> rejected_by_reason;
  std::size_t ocr_flagged = 0;
  std::vector<std::string> files;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);
  ~Pipeline();

  const PipelineConfig& config() const { return cfg_; }
  const std::string& digest() const { return digest_; }
  modelgate::ModelGateway& gateway() { return *gateway_; }
  render::Renderer& renderer() { return *renderer_; }

  void set_halt(HaltPoint h) { halt_ = h; }
  void set_log(std::function<void(const std::string&)> log) { log_ = std::move(log); }

  corpus::IngestReport ingest(const fs::path& root, corpus::SourceTag source);

  /// select -> image_to_code -> precheck -> render -> chain -> assemble ->
  /// write. Picks up from the pass's checkpoint when one exists. Throws
  /// Error(ConfigInvalid) if a later round already completed.
  RoundStats run_round(std::uint32_t index);
  /// TIKZ pairs of round `index` -> translate -> render -> chain -> assemble.
  RoundStats run_translation_pass(std::uint32_t index);
  /// resynthesize -> craft question -> dual solve -> accept -> post-filter.
  RoundStats run_problem_synthesis(std::uint32_t index);
  K12Summary run_k12(const fs::path& problems_file);

  /// Continues the pass that was in flight; nullopt when none was.
  std::optional<RoundStats> resume();

  std::vector<RoundStats> history() const;
  Report report() const;

  fs::path pass_state_dir(const std::string& name) const { return cfg_.paths.state_dir / name; }
  fs::path pass_output_dir(const std::string& name) const { return cfg_.paths.output_dir / name; }
  static std::string pass_name(const std::string& kind, std::uint32_t index);

 private:
  struct Pass;

  corpus::Catalog& catalog();
  RoundStats run_pass(const std::string& kind, std::uint32_t index);
  void select(Pass& p);
  void process(Pass& p);
  void solve(Pass& p);
  void write(Pass& p);
  RoundStats stats(Pass& p);
  void save_checkpoint(Pass& p);
  void halt_after(Stage s);
  void log(const std::string& msg) const;

  PipelineConfig cfg_;
  std::string digest_;
  std::unique_ptr<modelgate::ModelGateway> gateway_;
  std::unique_ptr<render::Renderer> renderer_;
  render::PrecheckTable precheck_;
  std::unique_ptr<corpus::Catalog> catalog_;
  std::optional<HaltPoint> halt_;
  std::function<void(const std::string&)> log_;
};

}  // namespace figforge::orchestrator
