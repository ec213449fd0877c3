#include "perflat/simplex.hpp"

#include <cmath>
#include <limits>

#include "perflat/errors.hpp"

namespace perflat::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

// Tableau rows 0..m-1 are constraints, each with its basic variable index.
// Column `cols` holds the right-hand side.
struct Tableau {
  std::size_t rows = 0, cols = 0;
  std::vector<std::vector<double>> a;
  std::vector<std::size_t> basis;

  void pivot(std::size_t r, std::size_t c) {
    double inv = 1.0 / a[r][c];
    for (double& v : a[r]) v *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      double f = a[i][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) a[i][j] -= f * a[r][j];
    }
    basis[r] = c;
  }
};

// Maximizes cost . x over the tableau restricted to `allowed` columns.
Status optimize(Tableau& t, const std::vector<double>& cost, const std::vector<bool>& allowed,
                double eps, std::size_t max_iterations) {
  for (std::size_t it = 0; it < max_iterations; ++it) {
    // reduced cost of column j: cost_j - sum_i cost_{basis i} a_ij
    std::size_t enter = t.cols;
    for (std::size_t j = 0; j < t.cols && enter == t.cols; ++j) {
      if (!allowed[j]) continue;
      double rc = cost[j];
      for (std::size_t i = 0; i < t.rows; ++i) rc -= cost[t.basis[i]] * t.a[i][j];
      if (rc > eps) enter = j;  // Bland: lowest index with positive reduced cost
    }
    if (enter == t.cols) return Status::Optimal;
    std::size_t leave = t.rows;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows; ++i) {
      if (t.a[i][enter] > eps) {
        double ratio = t.a[i][t.cols] / t.a[i][enter];
        if (ratio < best - 1e-15 ||
            (std::fabs(ratio - best) <= 1e-15 && leave < t.rows && t.basis[i] < t.basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == t.rows) return Status::Unbounded;
    t.pivot(leave, enter);
  }
  return Status::IterationLimit;
}

}  // namespace

Solution solve(const Problem& problem, double eps, std::size_t max_iterations) {
  const std::size_t n = problem.objective.size();
  const std::size_t m = problem.constraints.size();
  for (const auto& c : problem.constraints)
    if (c.coefficients.size() != n) throw DomainError("constraint width differs from objective");

  // columns: n structural, one slack/surplus per inequality, one artificial per row
  std::size_t slack_count = 0;
  for (const auto& c : problem.constraints)
    if (c.relation != Relation::Equal) ++slack_count;
  const std::size_t art0 = n + slack_count;
  Tableau t;
  t.rows = m;
  t.cols = art0 + m;
  t.a.assign(m, std::vector<double>(t.cols + 1, 0.0));
  t.basis.assign(m, 0);

  std::size_t slack = n;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = problem.constraints[i];
    double sign = c.rhs < 0.0 ? -1.0 : 1.0;  // keep rhs nonnegative
    for (std::size_t j = 0; j < n; ++j) t.a[i][j] = sign * c.coefficients[j];
    if (c.relation == Relation::LessEqual) t.a[i][slack++] = sign;
    else if (c.relation == Relation::GreaterEqual) t.a[i][slack++] = -sign;
    t.a[i][art0 + i] = 1.0;
    t.a[i][t.cols] = sign * c.rhs;
    t.basis[i] = art0 + i;
  }

  // phase 1: maximize -sum(artificials)
  std::vector<double> cost1(t.cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) cost1[art0 + i] = -1.0;
  std::vector<bool> all(t.cols, true);
  Solution sol;
  Status s1 = optimize(t, cost1, all, eps, max_iterations);
  if (s1 == Status::IterationLimit) {
    sol.status = s1;
    return sol;
  }
  double infeas = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] >= art0) infeas += t.a[i][t.cols];
  if (infeas > 1e-9) {
    sol.status = Status::Infeasible;
    return sol;
  }
  // drive remaining (zero-valued) artificials out of the basis where possible
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis[i] < art0) continue;
    for (std::size_t j = 0; j < art0; ++j)
      if (std::fabs(t.a[i][j]) > eps) {
        t.pivot(i, j);
        break;
      }
  }

  // phase 2
  std::vector<double> cost2(t.cols, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    cost2[j] = problem.maximize ? problem.objective[j] : -problem.objective[j];
  std::vector<bool> allowed(t.cols, true);
  for (std::size_t i = 0; i < m; ++i) allowed[art0 + i] = false;
  Status s2 = optimize(t, cost2, allowed, eps, max_iterations);
  sol.status = s2;
  if (s2 != Status::Optimal) return sol;
  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] < n) sol.x[t.basis[i]] = t.a[i][t.cols];
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += problem.objective[j] * sol.x[j];
  sol.objective = obj;
  return sol;
}

}  // namespace perflat::lp
