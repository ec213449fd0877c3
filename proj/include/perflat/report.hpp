#pragma once

// Pass/fail records produced by the property checkers.

#include <deque>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace perflat {

/// Number as JSON, infinities as the strings "inf" / "-inf".
nlohmann::json num_json(double v);
nlohmann::json values_json(std::span<const double> v);

struct CheckResult {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;  ///< number of instances examined
  std::size_t ties = 0;     ///< instances skipped or flagged as numerical ties
  std::string detail;
  nlohmann::json witness;   ///< null when passed

  void fail(std::string why, nlohmann::json w) {
    if (!passed) return;  // keep the first witness
    passed = false;
    detail = std::move(why);
    witness = std::move(w);
  }
};

struct Report {
  std::string subject;
  std::deque<CheckResult> checks;  // add() hands out references that must stay valid
  nlohmann::json info = nlohmann::json::object();

  bool passed() const;
  const CheckResult* find(const std::string& name) const;
  CheckResult& add(std::string name);
  nlohmann::json to_json() const;
};

}  // namespace perflat
