#include "figforge/orchestrator/stats.hpp"

#include <iomanip>
#include <sstream>

#include "figforge/common/error.hpp"

namespace figforge::orchestrator {

namespace {

template <typename K>
std::size_t sum(const std::map<K, std::size_t>& m) {
  std::size_t n = 0;
  for (const auto& [k, v] : m) n += v;
  return n;
}

template <typename K>
void add_into(std::map<K, std::size_t>& into, const std::map<K, std::size_t>& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

nlohmann::json dialect_counts(const std::map<Dialect, std::size_t>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [d, n] : m) j[std::string(modelgate::to_string(d))] = n;
  return j;
}

std::map<Dialect, std::size_t> dialect_counts_from(const nlohmann::json& j) {
  std::map<Dialect, std::size_t> m;
  for (const auto& [k, v] : j.items()) m[modelgate::parse_dialect(k)] = v.get<std::size_t>();
  return m;
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

std::size_t RoundStats::attempted_total() const { return sum(attempted); }
std::size_t RoundStats::rendered_ok_total() const { return sum(rendered_ok); }
std::size_t RoundStats::render_failures_total() const { return sum(render_failures); }

std::map<Dialect, double> RoundStats::success_rate() const {
  std::map<Dialect, double> out;
  for (const auto& [d, n] : attempted) {
    auto it = rendered_ok.find(d);
    out[d] = ratio(it == rendered_ok.end() ? 0 : it->second, n);
  }
  return out;
}

double RoundStats::overall_success_rate() const { return ratio(rendered_ok_total(), attempted_total()); }

double RoundStats::solution_pass_rate() const { return ratio(agreements, agreements + disagreements); }

std::string RoundStats::conservation_error() const {
  auto eq = [](const char* what, std::size_t a, std::size_t b) {
    return a == b ? std::string() : std::string(what) + " (" + std::to_string(a) + " != " + std::to_string(b) + ")";
  };
  for (const auto& e : {eq("inputs = generation failures + attempted", inputs, generation_failures + attempted_total()),
                        eq("attempted = rendered ok + render failures", attempted_total(),
                           rendered_ok_total() + render_failures_total()),
                        eq("rendered ok = chain verdicts", rendered_ok_total(), chain.total()),
                        eq("chain passes = pairs + holdout rejects", chain.passed(), pairs_emitted + holdout_rejects)}) {
    if (!e.empty()) return e;
  }
  if (kind == "SYNTH") {
    for (const auto& e : {eq("pairs = questions + question rejects", pairs_emitted, questions_crafted + sum(question_rejects)),
                          eq("questions = agreements + disagreements", questions_crafted, agreements + disagreements),
                          eq("agreements = post-filter verdicts", agreements, post_filter.total()),
                          eq("post-filter passes = problems", post_filter.passed(), problems_emitted)}) {
      if (!e.empty()) return e;
    }
  }
  return {};
}

RoundStats& RoundStats::operator+=(const RoundStats& o) {
  inputs += o.inputs;
  generation_failures += o.generation_failures;
  add_into(attempted, o.attempted);
  add_into(rendered_ok, o.rendered_ok);
  add_into(render_failures, o.render_failures);
  chain.merge(o.chain);
  holdout_rejects += o.holdout_rejects;
  pairs_emitted += o.pairs_emitted;
  questions_crafted += o.questions_crafted;
  add_into(question_rejects, o.question_rejects);
  agreements += o.agreements;
  disagreements += o.disagreements;
  post_filter.merge(o.post_filter);
  problems_emitted += o.problems_emitted;
  wall_ms += o.wall_ms;
  return *this;
}

nlohmann::json to_json(const RoundStats& s) {
  nlohmann::json failures = nlohmann::json::object();
  for (const auto& [st, n] : s.render_failures) failures[std::string(render::to_string(st))] = n;
  nlohmann::json rates = nlohmann::json::object();
  for (const auto& [d, r] : s.success_rate()) rates[std::string(modelgate::to_string(d))] = r;
  return {{"name", s.name},
          {"kind", s.kind},
          {"round_index", s.round_index},
          {"inputs", s.inputs},
          {"generation_failures", s.generation_failures},
          {"attempted", dialect_counts(s.attempted)},
          {"rendered_ok", dialect_counts(s.rendered_ok)},
          {"render_failures", failures},
          {"success_rate", rates},
          {"overall_success_rate", s.overall_success_rate()},
          {"chain", s.chain.to_json()},
          {"holdout_rejects", s.holdout_rejects},
          {"pairs_emitted", s.pairs_emitted},
          {"questions_crafted", s.questions_crafted},
          {"question_rejects", s.question_rejects},
          {"agreements", s.agreements},
          {"disagreements", s.disagreements},
          {"solution_pass_rate", s.solution_pass_rate()},
          {"post_filter", s.post_filter.to_json()},
          {"problems_emitted", s.problems_emitted},
          {"wall_ms", s.wall_ms}};
}

RoundStats round_stats_from_json(const nlohmann::json& j) {
  RoundStats s;
  s.name = j.at("name").get<std::string>();
  s.kind = j.at("kind").get<std::string>();
  s.round_index = j.at("round_index").get<std::uint32_t>();
  s.inputs = j.at("inputs").get<std::size_t>();
  s.generation_failures = j.at("generation_failures").get<std::size_t>();
  s.attempted = dialect_counts_from(j.at("attempted"));
  s.rendered_ok = dialect_counts_from(j.at("rendered_ok"));
  for (const auto& [k, v] : j.at("render_failures").items()) s.render_failures[render::parse_render_status(k)] = v.get<std::size_t>();
  s.chain = filters::VerdictTally::from_json(j.at("chain"));
  s.holdout_rejects = j.at("holdout_rejects").get<std::size_t>();
  s.pairs_emitted = j.at("pairs_emitted").get<std::size_t>();
  s.questions_crafted = j.at("questions_crafted").get<std::size_t>();
  s.question_rejects = j.at("question_rejects").get<std::map<std::string, std::size_t>>();
  s.agreements = j.at("agreements").get<std::size_t>();
  s.disagreements = j.at("disagreements").get<std::size_t>();
  s.post_filter = filters::VerdictTally::from_json(j.at("post_filter"));
  s.problems_emitted = j.at("problems_emitted").get<std::size_t>();
  s.wall_ms = j.at("wall_ms").get<double>();
  return s;
}

Report build_report(const std::vector<RoundStats>& history) {
  if (history.empty()) throw Error(ErrorCode::EmptyList, "no completed pass to report on");
  Report r;
  r.rounds = history;
  r.cumulative.name = "cumulative";
  r.cumulative.kind = "ALL";
  for (const auto& s : history) r.cumulative += s;
  return r;
}

namespace {

nlohmann::json shares(const RoundStats& s) {
  const std::size_t n = s.chain.total();
  nlohmann::json rejects = nlohmann::json::object();
  for (const auto& [reason, count] : s.chain.by_reason()) rejects[std::string(filters::to_string(reason))] = 100.0 * ratio(count, n);
  return {{"chain_inputs", n}, {"pass_pct", 100.0 * ratio(s.chain.passed(), n)}, {"reject_pct", rejects}};
}

}  // namespace

nlohmann::json to_json(const Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : r.rounds) {
    auto j = to_json(s);
    j["shares"] = shares(s);
    rows.push_back(std::move(j));
  }
  auto cum = to_json(r.cumulative);
  cum["shares"] = shares(r.cumulative);
  return {{"rounds", rows}, {"cumulative", cum}};
}

Report report_from_json(const nlohmann::json& j) {
  std::vector<RoundStats> history;
  for (const auto& row : j.at("rounds")) history.push_back(round_stats_from_json(row));
  Report r = build_report(history);
  // The stored cumulative row must agree with the rows it summarizes.
  if (!(round_stats_from_json(j.at("cumulative")) == r.cumulative)) {
    throw Error(ErrorCode::SchemaInvalid, "report cumulative row does not match its rounds");
  }
  return r;
}

std::string report_text(const Report& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  auto pct = [](double v) {
    std::ostringstream p;
    p << std::fixed << std::setprecision(1) << 100.0 * v << "%";
    return p.str();
  };
  auto row = [&](const RoundStats& s) {
    const auto rates = s.success_rate();
    auto rate_of = [&](Dialect d) {
      auto it = rates.find(d);
      return it == rates.end() ? std::string("-") : pct(it->second);
    };
    os << std::left << std::setw(14) << s.name << std::right << std::setw(8) << s.inputs << std::setw(8)
       << s.attempted_total() << std::setw(9) << rate_of(Dialect::Tikz) << std::setw(9) << rate_of(Dialect::PlotScript)
       << std::setw(9) << pct(s.overall_success_rate()) << std::setw(8) << s.pairs_emitted << std::setw(9)
       << s.problems_emitted << std::setw(9)
       << (s.agreements + s.disagreements ? pct(s.solution_pass_rate()) : std::string("-")) << "\n";
  };
  os << std::left << std::setw(14) << "pass" << std::right << std::setw(8) << "inputs" << std::setw(8) << "render"
     << std::setw(9) << "TIKZ" << std::setw(9) << "PLOT" << std::setw(9) << "overall" << std::setw(8) << "pairs"
     << std::setw(9) << "problems" << std::setw(9) << "passrate" << "\n";
  for (const auto& s : r.rounds) row(s);
  row(r.cumulative);

  os << "\ncleaning chain (share of chain inputs)\n";
  auto chain_rows = [&](const RoundStats& s) {
    const std::size_t n = s.chain.total();
    os << "  " << s.name << ": " << n << " in, PASS " << pct(ratio(s.chain.passed(), n));
    for (const auto& [reason, count] : s.chain.by_reason()) {
      os << ", " << filters::to_string(reason) << " " << count << " (" << pct(ratio(count, n)) << ")";
    }
    if (s.holdout_rejects) os << ", holdout " << s.holdout_rejects;
    os << "\n";
  };
  for (const auto& s : r.rounds) chain_rows(s);
  chain_rows(r.cumulative);

  bool any_failures = false;
  for (const auto& s : r.rounds) any_failures = any_failures || s.render_failures_total() || s.generation_failures;
  if (any_failures) {
    os << "\nrender failures\n";
    for (const auto& s : r.rounds) {
      os << "  " << s.name << ": no-code " << s.generation_failures;
      for (const auto& [st, n] : s.render_failures) os << ", " << render::to_string(st) << " " << n;
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace figforge::orchestrator
