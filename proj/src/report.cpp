#include "perflat/report.hpp"

#include <algorithm>
#include <limits>

namespace perflat {

nlohmann::json num_json(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "inf";
  if (v == -std::numeric_limits<double>::infinity()) return "-inf";
  return v;
}

nlohmann::json values_json(std::span<const double> v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(num_json(x));
  return a;
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

const CheckResult* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

CheckResult& Report::add(std::string name) {
  checks.push_back(CheckResult{});
  checks.back().name = std::move(name);
  return checks.back();
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["subject"] = subject;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e{{"name", c.name}, {"passed", c.passed}, {"checked", c.checked},
                     {"ties", c.ties}};
    if (!c.detail.empty()) e["detail"] = c.detail;
    if (!c.witness.is_null()) e["witness"] = c.witness;
    j["checks"].push_back(std::move(e));
  }
  j["info"] = info;
  return j;
}

}  // namespace perflat
