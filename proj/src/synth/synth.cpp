#include "figforge/synth/synth.hpp"

#include <future>
#include <regex>

#include "figforge/common/error.hpp"
#include "figforge/common/text.hpp"

namespace figforge::synth {

ResynthResult resynthesize(const corpus::ImageAsset& asset, std::size_t n_attempts, modelgate::ModelGateway& gateway,
                           render::Renderer& renderer, const render::PrecheckTable& precheck,
                           const filters::FilterConfig& filter_cfg, filters::DedupStore& dedup,
                           const ResynthOptions& opts) {
  ResynthResult out;
  for (std::size_t i = 0; i < n_attempts; ++i) {
    ++out.attempts;
    modelgate::GenerationResult gen;
    try {
      gen = gateway.image_to_code(asset, opts.dialect, opts.temperature, opts.endpoint_id, opts.round_index);
    } catch (const Error&) {
      ++out.generation_failures;
      continue;
    }
    if (!gen.extracted_code) {
      ++out.generation_failures;
      continue;
    }
    const auto& code = *gen.extracted_code;
    render::RenderJob job{code, opts.render_timeout_s, 150, {}};
    const render::RenderOutcome outcome = render::render(job, renderer, precheck);
    ++out.render_status[outcome.status];
    if (outcome.status != render::RenderStatus::Success) continue;
    const auto chained = filters::run_chain(code, outcome, filter_cfg, dedup);
    out.verdicts.add(chained.verdict);
    if (!chained.verdict.passed()) continue;
    out.pairs.push_back(pairs::assemble_pair(code, outcome, chained.verdict, {opts.round_index, asset.asset_id, {}}));
  }
  return out;
}

bool has_subparts(const std::string& question) {
  if (std::count(question.begin(), question.end(), '?') < 2) return false;
  static const std::regex marker(R"(\(\s*(?:[a-hA-H]|[ivx]{1,4}|\d{1,2})\s*\)|(?:^|\n)\s*(?:[a-h]|\d{1,2})[.)]\s)");
  const auto begin = std::sregex_iterator(question.begin(), question.end(), marker);
  return std::distance(begin, std::sregex_iterator()) >= 2;
}

SynthQuestion craft_question(const pairs::PairRecord& pair, modelgate::ModelGateway& gateway,
                             const std::string& endpoint_id, double temperature) {
  modelgate::GenerationRequest req;
  req.template_id = modelgate::TemplateId::QuestionSynth;
  req.slots = {{"dialect_name", std::string(modelgate::display_name(pair.code.dialect))},
               {"fence", std::string(modelgate::fence_label(pair.code.dialect))},
               {"code", pair.code.text}};
  req.temperature = temperature;
  req.endpoint_id = endpoint_id;
  const auto result = gateway.complete(req);

  std::string q(text::trim(result.raw_text));
  static const std::regex echo(R"(^#*\s*question\s*:\s*)", std::regex::icase);
  q = std::string(text::trim(std::regex_replace(q, echo, "", std::regex_constants::format_first_only)));
  if (q.empty()) throw Error(ErrorCode::EmptyResponse, "question generator returned nothing for " + pair.pair_id);
  if (has_subparts(q)) throw Error(ErrorCode::MultiQuestion, "question for " + pair.pair_id + " has sub-parts");

  SynthQuestion out;
  out.text = std::move(q);
  out.pair_id = pair.pair_id;
  out.dialect = pair.code.dialect;
  out.question_id = "q-" + sha256(pair.pair_id + "\n" + out.text).prefix(20);
  return out;
}

std::string_view to_string(SolverRole r) { return r == SolverRole::MathSpecialist ? "MATH_SPECIALIST" : "GENERALIST"; }

SolutionAttempt make_attempt(SolverRole role, std::string full_solution, std::string endpoint_id) {
  SolutionAttempt a;
  a.solver_role = role;
  a.extracted = extract_answer(full_solution);
  a.full_solution = std::move(full_solution);
  a.endpoint_id = std::move(endpoint_id);
  return a;
}

modelgate::GenerationRequest solve_request(const SynthQuestion& q, const pairs::PairRecord& pair, double temperature) {
  modelgate::GenerationRequest req;
  req.template_id = modelgate::TemplateId::Solve;
  req.slots = {{"dialect_name", std::string(modelgate::display_name(pair.code.dialect))},
               {"fence", std::string(modelgate::fence_label(pair.code.dialect))},
               {"question", q.text},
               {"code", pair.code.text}};
  req.temperature = temperature;
  return req;
}

std::pair<SolutionAttempt, SolutionAttempt> solve_dual(const SynthQuestion& q, const pairs::PairRecord& pair,
                                                       modelgate::ModelGateway& gateway, const SolverConfig& cfg) {
  auto run = [&](SolverRole role, const std::string& endpoint) {
    auto req = solve_request(q, pair, cfg.temperature);
    req.endpoint_id = endpoint;
    try {
      return make_attempt(role, gateway.complete(req).raw_text, endpoint);
    } catch (const Error& e) {
      SolutionAttempt failed;
      failed.solver_role = role;
      failed.endpoint_id = endpoint;
      failed.error = e.what();
      return failed;
    }
  };
  auto specialist = std::async(std::launch::async, run, SolverRole::MathSpecialist, cfg.specialist_endpoint);
  SolutionAttempt generalist = run(SolverRole::Generalist, cfg.generalist_endpoint);
  return {specialist.get(), std::move(generalist)};
}

namespace {

nlohmann::json attempt_json(const SolutionAttempt& a) {
  nlohmann::json j{{"role", to_string(a.solver_role)},
                   {"endpoint_id", a.endpoint_id},
                   {"solution", a.full_solution},
                   {"answer", to_json(a.extracted)}};
  if (!a.error.empty()) j["error"] = a.error;
  return j;
}

}  // namespace

nlohmann::json to_json(const ProblemRecord& r) {
  return {{"record_id", r.record_id},
          {"question", r.question},
          {"image_file", r.image_file},
          {"solution", r.chosen_solution},
          {"answer_kind", to_string(r.answer.kind)},
          {"answer_value", answer_value(r.answer)},
          {"provenance",
           {{"seed_asset_id", r.seed_asset_id},
            {"pair_id", r.pair_id},
            {"question_id", r.question_id},
            {"solvers", {attempt_json(r.specialist), attempt_json(r.generalist)}}}}};
}

double AcceptanceCounter::pass_rate() const {
  const std::size_t n = solved();
  return n == 0 ? 0.0 : static_cast<double>(emitted_count()) / static_cast<double>(n);
}

std::optional<ProblemRecord> accept_sample(const SynthQuestion& q,
                                           const std::pair<SolutionAttempt, SolutionAttempt>& attempts,
                                           const pairs::PairRecord& pair, AcceptanceCounter& counter) {
  const SolutionAttempt* specialist = &attempts.first;
  const SolutionAttempt* generalist = &attempts.second;
  if (specialist->solver_role != SolverRole::MathSpecialist) std::swap(specialist, generalist);
  if (!answers_agree(specialist->extracted, generalist->extracted)) {
    counter.dropped();
    return std::nullopt;
  }
  counter.emitted();
  ProblemRecord r;
  r.record_id = "prob-" + sha256(pair.pair_id + "\n" + q.question_id).prefix(20);
  r.question = q.text;
  r.image_file = pairs::image_file_name(pair.image);
  r.chosen_solution = specialist->full_solution;
  r.answer = specialist->extracted;
  r.seed_asset_id = pair.seed_asset_id.value_or("");
  r.pair_id = pair.pair_id;
  r.question_id = q.question_id;
  r.specialist = *specialist;
  r.generalist = *generalist;
  return r;
}

ContentDigest question_key(const std::string& question) {
  return sha256("QUESTION\n" + text::collapse_whitespace(question));
}

filters::FilterVerdict post_filter(const ProblemRecord& r, const filters::FilterConfig& cfg,
                                   filters::DedupStore& dedup) {
  if (!dedup.admit(question_key(r.question), text::collapse_whitespace(r.question))) {
    return filters::FilterVerdict::reject(filters::RejectReason::Duplicate, "question");
  }
  const std::size_t n = text::utf8_length(r.chosen_solution);
  if (n > cfg.max_code_chars) {
    return filters::FilterVerdict::reject(filters::RejectReason::TooLong,
                                          std::to_string(n) + " chars > " + std::to_string(cfg.max_code_chars));
  }
  return filters::FilterVerdict::pass();
}

}  // namespace figforge::synth
