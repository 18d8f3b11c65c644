#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace figforge::filters {

enum class Decision { Pass, Reject };

enum class RejectReason {
  Duplicate,
  Keyword,
  TooLong,
  Blank,
  NearWhite,
  BlackSquare,
  ForbiddenAccess,
  EquationOnly,
  SchemaInvalid,
};

std::string_view to_string(Decision d);
std::string_view to_string(RejectReason r);
RejectReason parse_reject_reason(std::string_view name);

struct FilterVerdict {
  Decision decision = Decision::Pass;
  std::optional<RejectReason> reason;  // always set on Reject
  std::string detail;

  static FilterVerdict pass() { return {}; }
  static FilterVerdict reject(RejectReason r, std::string detail = {}) {
    return FilterVerdict{Decision::Reject, r, std::move(detail)};
  }
  bool passed() const { return decision == Decision::Pass; }
};

nlohmann::json to_json(const FilterVerdict& v);
FilterVerdict verdict_from_json(const nlohmann::json& j);

// PASS / REJECT-by-reason counters. total() is the number of verdicts added, so
// total() == passed + sum(rejected) holds by construction.
class VerdictTally {
 public:
  void add(const FilterVerdict& v);
  void merge(const VerdictTally& other);

  std::size_t passed() const { return passed_; }
  std::size_t rejected(RejectReason r) const;
  std::size_t rejected_total() const;
  std::size_t total() const { return passed_ + rejected_total(); }
  const std::map<RejectReason, std::size_t>& by_reason() const { return rejected_; }

  nlohmann::json to_json() const;
  static VerdictTally from_json(const nlohmann::json& j);

  bool operator==(const VerdictTally&) const = default;

 private:
  std::size_t passed_ = 0;
  std::map<RejectReason, std::size_t> rejected_;
};

}  // namespace figforge::filters
