// figforge: command-line driver for the figure/code data engine.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "figforge/common/error.hpp"
#include "figforge/orchestrator/pipeline.hpp"

namespace ff = figforge;
namespace orch = figforge::orchestrator;

namespace {

constexpr int kExitFatal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitHalted = 75;

void print_stats(const orch::RoundStats& s, bool json) {
  if (json) {
    std::cout << orch::to_json(s).dump(2) << "\n";
    return;
  }
  std::cout << s.name << ": inputs " << s.inputs << ", pairs " << s.pairs_emitted << ", success rate "
            << s.overall_success_rate();
  if (s.kind == "SYNTH") std::cout << ", problems " << s.problems_emitted << ", pass rate " << s.solution_pass_rate();
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"figforge: image/code pair synthesis pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool stub = false;
  std::optional<std::uint64_t> seed;
  std::string halt_at;
  bool quiet = false;
  bool json = false;
  app.add_option("--config", config_path, "pipeline config (JSON, comments allowed)")->check(CLI::ExistingFile);
  app.add_flag("--stub", stub, "force stub endpoints, renderer and OCR");
  app.add_option("--seed", seed, "sampling seed");
  app.add_flag("-q,--quiet", quiet, "no progress messages");
  app.add_option("--halt-at", halt_at)->group("");

  std::string root;
  std::string source = "DATIKZ_SEED";
  auto* ingest = app.add_subcommand("ingest", "catalog the images under a directory");
  ingest->add_option("--root", root, "directory to walk")->required();
  ingest->add_option("--source", source, "source tag for new assets");

  std::uint32_t index = 0;
  auto* round = app.add_subcommand("round", "run one image-to-code round");
  round->add_option("--index", index, "round index")->required();
  std::string endpoint;
  round->add_option("--endpoint", endpoint, "endpoint id for this round (after external retraining)");
  round->add_flag("--json", json, "print stats as JSON");

  auto* translate = app.add_subcommand("translate", "translate a round's TikZ pairs to Python");
  translate->add_option("--index", index, "source round index")->required();
  translate->add_flag("--json", json, "print stats as JSON");

  auto* synth = app.add_subcommand("synth-problems", "resynthesize figures and craft checked problems");
  synth->add_option("--index", index, "synthesis pass index");
  synth->add_flag("--json", json, "print stats as JSON");

  std::string input;
  auto* k12 = app.add_subcommand("k12-process", "OCR, augment and validate K12 problems");
  k12->add_option("--input", input, "NDJSON of raw problems")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "per-round and cumulative statistics");
  report->add_flag("--json", json, "machine-readable report");

  auto* resume = app.add_subcommand("resume", "continue the pass that was interrupted");
  resume->add_flag("--json", json, "print stats as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    orch::PipelineConfig cfg = config_path.empty() ? orch::PipelineConfig{} : orch::load_config(config_path);
    if (stub) orch::force_stub(cfg);
    if (seed) cfg.seed = *seed;
    if (round->parsed() && !endpoint.empty()) {
      orch::RoundConfig r = cfg.round(index);
      r.endpoint = endpoint;
      cfg.rounds[index] = r;
    }

    orch::Pipeline pipeline(std::move(cfg));
    if (!quiet) pipeline.set_log([](const std::string& m) { std::cerr << m << "\n"; });
    if (!halt_at.empty()) pipeline.set_halt(orch::parse_halt_point(halt_at));

    if (ingest->parsed()) {
      const auto rep = pipeline.ingest(root, ff::corpus::parse_source_tag(source));
      std::cout << "added " << rep.added.size() << ", already present " << rep.already_present << ", skipped "
                << rep.skipped.size() << "\n";
    } else if (round->parsed()) {
      print_stats(pipeline.run_round(index), json);
    } else if (translate->parsed()) {
      print_stats(pipeline.run_translation_pass(index), json);
    } else if (synth->parsed()) {
      print_stats(pipeline.run_problem_synthesis(index), json);
    } else if (k12->parsed()) {
      const auto sum = pipeline.run_k12(input);
      std::cout << sum.source_file << ": admitted " << sum.admitted << ", rejected " << sum.rejected
                << ", ocr flagged " << sum.ocr_flagged << "\n";
    } else if (report->parsed()) {
      const auto rep = pipeline.report();
      std::cout << (json ? orch::to_json(rep).dump(2) + "\n" : orch::report_text(rep));
    } else if (resume->parsed()) {
      const auto s = pipeline.resume();
      if (!s) {
        std::cout << "nothing to resume\n";
      } else {
        print_stats(*s, json);
      }
    }
  } catch (const orch::HaltRequested& e) {
    std::cerr << e.what() << "\n";
    return kExitHalted;
  } catch (const ff::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return 0;
}
