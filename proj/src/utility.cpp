#include "perflat/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "perflat/errors.hpp"
#include "perflat/lattice.hpp"

namespace perflat {

Utility Utility::linear() { return Utility(Kind::Linear, 0.0); }

Utility Utility::exponential(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ValidationError("utility_parameter", "exponential utility needs lambda > 0");
  return Utility(Kind::Exponential, lambda);
}

Utility Utility::power(double eta) {
  if (!(eta < 1.0) || eta == 0.0 || !std::isfinite(eta))
    throw ValidationError("utility_parameter", "power utility needs eta < 1, eta != 0");
  return Utility(Kind::Power, eta);
}

Utility Utility::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2)
    throw ValidationError("utility_parameter", "piecewise linear utility needs two knots");
  std::sort(knots.begin(), knots.end());
  double prev = kInf;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    double dx = knots[i].first - knots[i - 1].first;
    if (!(dx > 0.0))
      throw ValidationError("utility_parameter", "piecewise linear knots must be distinct");
    double slope = (knots[i].second - knots[i - 1].second) / dx;
    if (slope < 0.0)
      throw ValidationError("utility_monotone", "piecewise linear utility decreases");
    if (slope > prev + 1e-12)
      throw ValidationError("utility_concave", "piecewise linear slopes must not increase");
    prev = slope;
  }
  double first = (knots[1].second - knots[0].second) / (knots[1].first - knots[0].first);
  if (!(first > 0.0))
    throw ValidationError("utility_monotone", "piecewise linear utility is constant");
  Utility u(Kind::PiecewiseLinear, 0.0);
  u.knots_ = std::move(knots);
  return u;
}

std::string Utility::name() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Linear: return "linear";
    case Kind::Exponential: os << "exp(" << param_ << ")"; break;
    case Kind::Power: os << "power(" << param_ << ")"; break;
    case Kind::PiecewiseLinear: os << "piecewise_linear[" << knots_.size() << "]"; break;
  }
  return os.str();
}

namespace {

double slope(const std::pair<double, double>& a, const std::pair<double, double>& b) {
  return (b.second - a.second) / (b.first - a.first);
}

}  // namespace

double Utility::sup_value() const {
  switch (kind_) {
    case Kind::Linear: return kInf;
    case Kind::Exponential: return 1.0;
    case Kind::Power: return param_ < 0.0 ? -1.0 / param_ : kInf;
    case Kind::PiecewiseLinear: {
      double s = slope(knots_[knots_.size() - 2], knots_.back());
      return s > 0.0 ? kInf : knots_.back().second;
    }
  }
  return kInf;
}

bool Utility::strictly_increasing() const {
  if (kind_ != Kind::PiecewiseLinear) return true;
  return slope(knots_[knots_.size() - 2], knots_.back()) > 0.0;
}

double Utility::value(double x) const {
  if (x == kInf) return sup_value();
  switch (kind_) {
    case Kind::Linear: return x;
    case Kind::Exponential: return -std::expm1(-param_ * x);
    case Kind::Power:
      if (x < 0.0) return x;
      return std::expm1(param_ * std::log1p(x)) / param_;
    case Kind::PiecewiseLinear: {
      const auto& k = knots_;
      if (x <= k.front().first) return k.front().second + slope(k[0], k[1]) * (x - k.front().first);
      for (std::size_t i = 1; i < k.size(); ++i)
        if (x <= k[i].first) return k[i - 1].second + slope(k[i - 1], k[i]) * (x - k[i - 1].first);
      return k.back().second + slope(k[k.size() - 2], k.back()) * (x - k.back().first);
    }
  }
  return x;
}

double Utility::inverse(double y) const {
  if (std::isnan(y)) throw DomainError("utility inverse of NaN");
  if (y == -kInf) return -kInf;
  if (y >= sup_value()) return kInf;
  switch (kind_) {
    case Kind::Linear: return y;
    case Kind::Exponential: return -std::log1p(-y) / param_;
    case Kind::Power:
      if (y < 0.0) return y;
      return std::expm1(std::log1p(param_ * y) / param_);
    case Kind::PiecewiseLinear: {
      const auto& k = knots_;
      if (y <= k.front().second) return k.front().first + (y - k.front().second) / slope(k[0], k[1]);
      for (std::size_t i = 1; i < k.size(); ++i)
        if (y <= k[i].second) {
          double s = slope(k[i - 1], k[i]);
          return k[i - 1].first + (y - k[i - 1].second) / s;
        }
      return k.back().first + (y - k.back().second) / slope(k[k.size() - 2], k.back());
    }
  }
  return y;
}

void Utility::validate() const {
  const double h = 0.05;
  for (double x = -20.0; x <= 20.0; x += 0.37) {
    double a = value(x - h), b = value(x), c = value(x + h);
    if (!(a <= b + 1e-12 && b <= c + 1e-12))
      throw ValidationError("utility_monotone", "utility " + name() + " decreases near " +
                                                    std::to_string(x));
    if (a + c - 2.0 * b > 1e-9)
      throw ValidationError("utility_concave", "utility " + name() + " is not concave near " +
                                                   std::to_string(x));
  }
}

double Utility::certainty_equivalent(std::span<const double> values,
                                     std::span<const double> weights) const {
  double mass = 0.0;
  for (double w : weights) mass += w;
  if (!(mass > 0.0)) throw DomainError("certainty equivalent over zero mass");
  if (kind_ == Kind::Exponential) {
    // -(1/lambda) log( sum w e^{-lambda x} / mass ), shifted by the minimum
    double m = kInf;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (weights[i] > 0.0) m = std::min(m, values[i]);
    if (m == kInf) return kInf;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (weights[i] > 0.0 && values[i] != kInf)
        acc += weights[i] * std::exp(-param_ * (values[i] - m));
    return m - std::log(acc / mass) / param_;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += ext::mul(weights[i], value(values[i]));
  return inverse(acc / mass);
}

}  // namespace perflat
