#pragma once

// Deterministic random generation of spaces and variables for the checkers.

#include <cstdint>
#include <random>

#include "perflat/lattice.hpp"

namespace perflat {

/// mt19937_64 with a hand-rolled uniform draw so sequences are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(gen_() % (hi - lo + 1));
  }
  bool coin(double p = 0.5) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

/// Seed for sub-task `index` of a run seeded with `seed` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct TreeShape {
  std::size_t min_stages = 2;  ///< horizon T, inclusive bounds
  std::size_t max_stages = 3;
  std::size_t max_leaves = 16;
  std::size_t max_branching = 3;
};

/// Random scenario tree with random positive leaf probabilities.
SpacePtr random_tree(Rng& rng, const TreeShape& shape = {});

struct XVarShape {
  double lo = -5.0;
  double hi = 5.0;
  double inf_probability = 0.0;   ///< chance a leaf is +inf
  double grid_probability = 0.2;  ///< chance the variable is drawn on a 0.25 grid
};

XVar random_xvar(Rng& rng, const SpacePtr& space, const XVarShape& shape = {});
TVar random_tvar(Rng& rng, const SpacePtr& space, std::size_t t, double lo, double hi);
EventMask random_event(Rng& rng, const SpacePtr& space, std::size_t t);

}  // namespace perflat
