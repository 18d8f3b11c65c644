#pragma once

#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/render/types.hpp"

namespace figforge::render {

struct PrecheckRule {
  Dialect dialect;
  std::string name;
  std::string pattern;  // ECMAScript regex searched over the raw code text
};

struct PrecheckResult {
  bool pass = true;
  std::string reason;  // "<rule name>: <matched text>" when rejected
};

// Compiled rule table. Construction compiles every pattern once.
class PrecheckTable {
 public:
  PrecheckTable();  // default_precheck_rules()
  explicit PrecheckTable(std::vector<PrecheckRule> rules);

  PrecheckResult check(const CodeSample& code) const;
  const std::vector<PrecheckRule>& rules() const { return rules_; }

 private:
  std::vector<PrecheckRule> rules_;
  std::vector<std::regex> compiled_;
};

/// File includes and graphics loads for TikZ; file reads, image loads, network
/// and process access for plot scripts.
std::vector<PrecheckRule> default_precheck_rules();
/// [{"dialect": "TIKZ", "name": "...", "pattern": "..."}, ...]
std::vector<PrecheckRule> precheck_rules_from_json(const nlohmann::json& j);

PrecheckResult static_precheck(const CodeSample& code, const PrecheckTable& table);
PrecheckResult static_precheck(const CodeSample& code);

}  // namespace figforge::render
