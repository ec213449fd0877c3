#include "perflat/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace perflat {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SpacePtr random_tree(Rng& rng, const TreeShape& shape) {
  const std::size_t horizon = rng.index(shape.min_stages, shape.max_stages);
  // parent_of[t][node] = parent node at stage t-1. Every stage gets at least
  // one branching node; oversized trees are redrawn.
  std::vector<std::vector<std::size_t>> parent_of;
  std::size_t width = 1;
  for (int attempt = 0;; ++attempt) {
    parent_of.assign(horizon + 1, {});
    parent_of[0] = {0};
    width = 1;
    for (std::size_t t = 1; t <= horizon; ++t) {
      std::vector<std::size_t> parents;
      std::size_t forced = rng.index(0, width - 1);
      for (std::size_t node = 0; node < width; ++node) {
        std::size_t kids = rng.index(1, shape.max_branching);
        if (node == forced && kids < 2) kids = 2;
        for (std::size_t k = 0; k < kids; ++k) parents.push_back(node);
      }
      parent_of[t] = std::move(parents);
      width = parent_of[t].size();
    }
    if (width <= shape.max_leaves) break;
    if (attempt > 1000) throw DomainError("cannot draw a tree within the leaf cap");
  }

  const std::size_t n = width;
  std::vector<std::string> ids(n);
  std::vector<double> probs(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = "w" + std::to_string(i);
    probs[i] = rng.uniform(0.2, 1.0);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  // renormalize the rounding residue onto the largest leaf
  double s = std::accumulate(probs.begin(), probs.end(), 0.0);
  *std::max_element(probs.begin(), probs.end()) += 1.0 - s;

  std::vector<FilteredSpace::Partition> parts(horizon + 1);
  // node_of[leaf] at each stage, walking up from the leaves
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), 0);
  for (std::size_t t = horizon + 1; t-- > 0;) {
    std::size_t nodes = parent_of[t].size();
    parts[t].assign(nodes, {});
    for (std::size_t leaf = 0; leaf < n; ++leaf) parts[t][node[leaf]].push_back(leaf);
    if (t > 0)
      for (std::size_t leaf = 0; leaf < n; ++leaf) node[leaf] = parent_of[t][node[leaf]];
  }
  return FilteredSpace::create(std::move(ids), std::move(probs), std::move(parts),
                               "random");
}

XVar random_xvar(Rng& rng, const SpacePtr& space, const XVarShape& shape) {
  bool grid = rng.coin(shape.grid_probability);
  std::vector<double> v(space->leaf_count());
  for (double& x : v) {
    x = rng.uniform(shape.lo, shape.hi);
    if (grid) x = std::round(x * 4.0) / 4.0;
    if (shape.inf_probability > 0.0 && rng.coin(shape.inf_probability)) x = kInf;
  }
  return XVar(space, std::move(v));
}

TVar random_tvar(Rng& rng, const SpacePtr& space, std::size_t t, double lo, double hi) {
  std::vector<double> v(space->atom_count(t));
  for (double& x : v) x = rng.uniform(lo, hi);
  return TVar(space, t, std::move(v));
}

EventMask random_event(Rng& rng, const SpacePtr& space, std::size_t t) {
  std::vector<bool> m(space->atom_count(t));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.coin();
  return EventMask(space, t, std::move(m));
}

}  // namespace perflat
