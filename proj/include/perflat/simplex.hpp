#pragma once

// Small dense two-phase simplex (Bland's rule). Variables are x >= 0.

#include <cstddef>
#include <vector>

namespace perflat::lp {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Constraint {
  std::vector<double> coefficients;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct Problem {
  std::vector<double> objective;
  std::vector<Constraint> constraints;
  bool maximize = true;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

Solution solve(const Problem& problem, double eps = 1e-11, std::size_t max_iterations = 100000);

const char* to_string(Status s);

}  // namespace perflat::lp
