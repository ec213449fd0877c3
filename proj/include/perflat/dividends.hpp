#pragma once

// Dividend processes and the lift of a measure to processes,
// beta_hat_t(D) = beta_t(sum_{r >= t} D_r).

#include <cstdint>
#include <map>

#include "perflat/dynamics.hpp"
#include "perflat/lattice.hpp"
#include "perflat/measures.hpp"
#include "perflat/report.hpp"

namespace perflat {

class DividendProcess {
 public:
  /// Payments keyed by stage; each must be bounded below. Missing stages pay 0.
  DividendProcess(SpacePtr space, std::map<std::size_t, TVar> payments);
  static DividendProcess zero(SpacePtr space);
  /// Single terminal payment X at T.
  static DividendProcess terminal(const XVar& x);

  const SpacePtr& space_ptr() const noexcept { return space_; }
  const std::map<std::size_t, TVar>& payments() const noexcept { return payments_; }
  /// Payment at stage r (zero when absent).
  TVar payment(std::size_t r) const;

  /// sum_{r >= t} D_r promoted to leaf level.
  XVar aggregate_from(std::size_t t) const;

  DividendProcess with_payment(std::size_t r, const TVar& d) const;
  DividendProcess plus(const DividendProcess& other) const;

 private:
  SpacePtr space_;
  std::map<std::size_t, TVar> payments_;
};

TVar lift_evaluate(const Measure& m, std::size_t t, const DividendProcess& d);

/// Property tests for the lifted measure on random processes, plus the
/// identity beta_hat_t(D) = beta_hat_t((sum_{r >= t} D_r) at T).
Report check_lift_axioms(const Measure& m, std::size_t trials, std::uint64_t seed);

/// Compares variable-level and process-level time consistency on samples and
/// transports variable-level witnesses to processes via D = X at T.
Report check_lift_time_consistency(const DynamicMeasure& d, std::span<const double> z_grid,
                                   std::size_t trials, std::uint64_t seed,
                                   std::size_t search_budget = 0);

}  // namespace perflat
