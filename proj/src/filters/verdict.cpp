#include "figforge/filters/verdict.hpp"

#include "figforge/common/error.hpp"

namespace figforge::filters {

std::string_view to_string(Decision d) { return d == Decision::Pass ? "PASS" : "REJECT"; }

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Duplicate: return "DUPLICATE";
    case RejectReason::Keyword: return "KEYWORD";
    case RejectReason::TooLong: return "TOO_LONG";
    case RejectReason::Blank: return "BLANK";
    case RejectReason::NearWhite: return "NEAR_WHITE";
    case RejectReason::BlackSquare: return "BLACK_SQUARE";
    case RejectReason::ForbiddenAccess: return "FORBIDDEN_ACCESS";
    case RejectReason::EquationOnly: return "EQUATION_ONLY";
    case RejectReason::SchemaInvalid: return "SCHEMA_INVALID";
  }
  return "UNKNOWN";
}

RejectReason parse_reject_reason(std::string_view name) {
  for (auto r : {RejectReason::Duplicate, RejectReason::Keyword, RejectReason::TooLong, RejectReason::Blank,
                 RejectReason::NearWhite, RejectReason::BlackSquare, RejectReason::ForbiddenAccess,
                 RejectReason::EquationOnly, RejectReason::SchemaInvalid}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown reject reason '" + std::string(name) + "'");
}

nlohmann::json to_json(const FilterVerdict& v) {
  nlohmann::json j{{"decision", to_string(v.decision)}};
  if (v.reason) j["reason"] = to_string(*v.reason);
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

FilterVerdict verdict_from_json(const nlohmann::json& j) {
  FilterVerdict v;
  const std::string decision = j.at("decision").get<std::string>();
  if (decision == "REJECT") {
    v.decision = Decision::Reject;
    v.reason = parse_reject_reason(j.at("reason").get<std::string>());
  } else if (decision != "PASS") {
    throw Error(ErrorCode::SchemaInvalid, "unknown decision '" + decision + "'");
  }
  v.detail = j.value("detail", std::string());
  return v;
}

void VerdictTally::add(const FilterVerdict& v) {
  if (v.passed()) {
    ++passed_;
  } else {
    ++rejected_[v.reason.value_or(RejectReason::SchemaInvalid)];
  }
}

void VerdictTally::merge(const VerdictTally& other) {
  passed_ += other.passed_;
  for (const auto& [r, n] : other.rejected_) rejected_[r] += n;
}

std::size_t VerdictTally::rejected(RejectReason r) const {
  auto it = rejected_.find(r);
  return it == rejected_.end() ? 0 : it->second;
}

std::size_t VerdictTally::rejected_total() const {
  std::size_t n = 0;
  for (const auto& [r, c] : rejected_) n += c;
  return n;
}

nlohmann::json VerdictTally::to_json() const {
  nlohmann::json rejects = nlohmann::json::object();
  for (const auto& [r, n] : rejected_) rejects[std::string(to_string(r))] = n;
  return {{"passed", passed_}, {"rejected", rejects}};
}

VerdictTally VerdictTally::from_json(const nlohmann::json& j) {
  VerdictTally t;
  t.passed_ = j.at("passed").get<std::size_t>();
  for (const auto& [name, n] : j.at("rejected").items()) t.rejected_[parse_reject_reason(name)] = n.get<std::size_t>();
  return t;
}

}  // namespace figforge::filters
