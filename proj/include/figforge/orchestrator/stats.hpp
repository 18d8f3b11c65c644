#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/filters/verdict.hpp"
#include "figforge/modelgate/types.hpp"
#include "figforge/render/types.hpp"

namespace figforge::orchestrator {

using modelgate::Dialect;

// Counters for one pass (a round, a translation pass or a synthesis pass).
// Conservation, checked by conserved():
//   inputs         = generation_failures + attempted
//   attempted      = rendered_ok + render failures
//   rendered_ok    = chain verdicts
//   chain passes   = pairs_emitted + holdout_rejects
// and for synthesis passes:
//   pairs_emitted  = questions_crafted + question rejects
//   questions      = solved = agreements + disagreements
//   agreements     = post-filter verdicts; post-filter passes = problems_emitted
struct RoundStats {
  std::string name;  // "round-0", "translate-0", "synth-0"
  std::string kind;  // ROUND | TRANSLATE | SYNTH
  std::uint32_t round_index = 0;
  std::size_t inputs = 0;
  std::size_t generation_failures = 0;
  std::map<Dialect, std::size_t> attempted;
  std::map<Dialect, std::size_t> rendered_ok;
  std::map<render::RenderStatus, std::size_t> render_failures;
  filters::VerdictTally chain;
  std::size_t holdout_rejects = 0;
  std::size_t pairs_emitted = 0;

  std::size_t questions_crafted = 0;
  std::map<std::string, std::size_t> question_rejects;  // error code name -> count
  std::size_t agreements = 0;
  std::size_t disagreements = 0;
  filters::VerdictTally post_filter;
  std::size_t problems_emitted = 0;

  double wall_ms = 0.0;

  std::size_t attempted_total() const;
  std::size_t rendered_ok_total() const;
  std::size_t render_failures_total() const;
  /// rendered_ok / attempted per dialect; dialects never attempted are absent.
  std::map<Dialect, double> success_rate() const;
  double overall_success_rate() const;
  /// agreements / (agreements + disagreements); 0 with nothing solved.
  double solution_pass_rate() const;
  /// Empty when every conservation equation holds, else the first that fails.
  std::string conservation_error() const;
  bool conserved() const { return conservation_error().empty(); }

  RoundStats& operator+=(const RoundStats& other);
  bool operator==(const RoundStats&) const = default;
};

nlohmann::json to_json(const RoundStats& s);
RoundStats round_stats_from_json(const nlohmann::json& j);

struct Report {
  std::vector<RoundStats> rounds;
  RoundStats cumulative;

  bool operator==(const Report&) const = default;
};

/// Throws Error(EmptyList) without any completed pass.
Report build_report(const std::vector<RoundStats>& history);
/// Per-pass rows plus derived shares (reject percentages of chain inputs, PASS
/// share, success and pass rates). The derived fields are recomputed on parse.
nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);
std::string report_text(const Report& r);

}  // namespace figforge::orchestrator
