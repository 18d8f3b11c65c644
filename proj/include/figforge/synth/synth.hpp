#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/corpus/asset.hpp"
#include "figforge/filters/chain.hpp"
#include "figforge/modelgate/gateway.hpp"
#include "figforge/pairs/pairs.hpp"
#include "figforge/render/precheck.hpp"
#include "figforge/render/renderer.hpp"
#include "figforge/synth/answer.hpp"

namespace figforge::synth {

using modelgate::Dialect;

struct ResynthOptions {
  std::string endpoint_id;
  Dialect dialect = Dialect::Tikz;
  double temperature = 0.7;
  std::uint32_t round_index = 0;
  double render_timeout_s = 60.0;
};

struct ResynthResult {
  std::vector<pairs::PairRecord> pairs;
  std::size_t attempts = 0;
  std::size_t generation_failures = 0;  // endpoint errors and replies without code
  std::map<render::RenderStatus, std::size_t> render_status;
  filters::VerdictTally verdicts;
};

/// n_attempts image-to-code calls on one seed, each rendered and passed
/// through the cleaning chain. Per-attempt failures are counted, never thrown.
ResynthResult resynthesize(const corpus::ImageAsset& asset, std::size_t n_attempts, modelgate::ModelGateway& gateway,
                           render::Renderer& renderer, const render::PrecheckTable& precheck,
                           const filters::FilterConfig& filter_cfg, filters::DedupStore& dedup,
                           const ResynthOptions& opts);

struct SynthQuestion {
  std::string question_id;
  std::string text;
  std::string pair_id;
  Dialect dialect = Dialect::Tikz;
};

/// Asks for one question from the pair's code (no image attached). Throws
/// Error(EmptyResponse) or Error(MultiQuestion).
SynthQuestion craft_question(const pairs::PairRecord& pair, modelgate::ModelGateway& gateway,
                             const std::string& endpoint_id, double temperature = 0.0);

/// Several question marks together with several enumeration markers such as
/// "(a)", "(ii)" or a line starting "1.".
bool has_subparts(const std::string& question);

enum class SolverRole { MathSpecialist, Generalist };
std::string_view to_string(SolverRole r);

struct SolutionAttempt {
  SolverRole solver_role = SolverRole::MathSpecialist;
  std::string full_solution;
  ExtractedAnswer extracted;  // always extract_answer(full_solution)
  std::string endpoint_id;
  std::string error;          // set when the role's call failed
};

SolutionAttempt make_attempt(SolverRole role, std::string full_solution, std::string endpoint_id);

struct SolverConfig {
  std::string specialist_endpoint;
  std::string generalist_endpoint;
  double temperature = 0.0;
};

/// The SOLVE prompt shared by both roles.
modelgate::GenerationRequest solve_request(const SynthQuestion& q, const pairs::PairRecord& pair, double temperature);

/// Both roles run concurrently on the same prompt. A failed call yields an
/// attempt whose answer is NONE.
std::pair<SolutionAttempt, SolutionAttempt> solve_dual(const SynthQuestion& q, const pairs::PairRecord& pair,
                                                       modelgate::ModelGateway& gateway, const SolverConfig& cfg);

struct ProblemRecord {
  std::string record_id;
  std::string question;
  std::string image_file;
  std::string chosen_solution;
  ExtractedAnswer answer;
  std::string seed_asset_id;
  std::string pair_id;
  std::string question_id;
  SolutionAttempt specialist;
  SolutionAttempt generalist;
};

/// {record_id, question, image_file, solution, answer_kind, answer_value, provenance}
nlohmann::json to_json(const ProblemRecord& r);

// Thread-safe emitted/dropped counts for one batch.
class AcceptanceCounter {
 public:
  void emitted() { emitted_.fetch_add(1); }
  void dropped() { dropped_.fetch_add(1); }
  std::size_t emitted_count() const { return emitted_.load(); }
  std::size_t dropped_count() const { return dropped_.load(); }
  std::size_t solved() const { return emitted_count() + dropped_count(); }
  /// emitted / solved; 0 when nothing was solved.
  double pass_rate() const;

 private:
  std::atomic<std::size_t> emitted_{0};
  std::atomic<std::size_t> dropped_{0};
};

/// Emits a record iff the two answers agree; keeps the specialist's solution.
std::optional<ProblemRecord> accept_sample(const SynthQuestion& q,
                                           const std::pair<SolutionAttempt, SolutionAttempt>& attempts,
                                           const pairs::PairRecord& pair, AcceptanceCounter& counter);

/// Dedup key of a question: digest of its whitespace-collapsed text.
ContentDigest question_key(const std::string& question);

/// Dedup on the normalized question text and a length cap on the solution,
/// using a cleaning config of its own.
filters::FilterVerdict post_filter(const ProblemRecord& r, const filters::FilterConfig& cfg,
                                   filters::DedupStore& dedup);

}  // namespace figforge::synth
