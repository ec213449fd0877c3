#pragma once

// Concave nondecreasing utilities with closed-form inverses.

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace perflat {

class Utility {
 public:
  enum class Kind { Linear, Exponential, Power, PiecewiseLinear };

  static Utility linear();
  /// 1 - exp(-lambda x), lambda > 0.
  static Utility exponential(double lambda);
  /// ((1 + x)^eta - 1) / eta for x >= 0, continued linearly (slope 1) below 0.
  /// eta < 1, eta != 0.
  static Utility power(double eta);
  /// Interpolates (x, y) knots, extended linearly with the end slopes.
  static Utility piecewise_linear(std::vector<std::pair<double, double>> knots);

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return param_; }
  const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }
  std::string name() const;

  /// U(x); x may be +inf, giving sup_value().
  double value(double x) const;
  /// Smallest x with U(x) >= y; +inf when y >= sup_value() is not attained,
  /// -inf never (utilities here are unbounded below).
  double inverse(double y) const;
  /// U(+inf).
  double sup_value() const;
  bool strictly_increasing() const;
  bool positively_homogeneous() const { return kind_ == Kind::Linear; }

  /// Sampled concavity / monotonicity check; throws ValidationError.
  void validate() const;

  /// U^{-1}(sum w U(x) / sum w). The exponential case is evaluated in
  /// log-sum-exp form so large losses do not overflow.
  double certainty_equivalent(std::span<const double> values,
                              std::span<const double> weights) const;

 private:
  Utility(Kind k, double param) : kind_(k), param_(param) {}
  Kind kind_;
  double param_;
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace perflat
