#pragma once

// Randomized checks of the performance-measure axioms.

#include <cstdint>

#include "perflat/lattice.hpp"
#include "perflat/measures.hpp"
#include "perflat/report.hpp"

namespace perflat {

/// Check names, in report order.
inline constexpr const char* kAxiomNames[] = {
    "quasi_concave",     "bounds",  "monotone", "strict_shift",
    "continuous_below",  "local",   "level_set_lower_bound"};

Report check_axioms(const Measure& m, std::size_t t, std::size_t trials, std::uint64_t seed,
                    const Tolerances& tol = {});

/// beta(cX) = beta(X) for c > 0 and beta(xi) = beta(1) on {xi > 0}, beta(0)
/// on {xi <= 0} for F_t-measurable xi.
Report check_scale_invariance(const Measure& m, std::size_t t, std::size_t trials,
                              std::uint64_t seed);

}  // namespace perflat
