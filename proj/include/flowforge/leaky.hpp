#pragma once

#include "flowforge/program.hpp"

namespace flowforge {

// Vector leaky-ReLU target: slope alpha_i on the negative side of
// coordinate i, identity on the nonnegative side; valid on `domain`.
struct LeakySpec {
    Vec alpha;
    BoxDomain domain;
};

// Direct componentwise evaluation; the oracle for this module.
Vec eval_leaky(const Vec& alpha, const Vec& x);

// sigma_alpha with one uniform slope alpha in (0,1], exact on all of R^d:
// [ReLU, t=-ln(alpha)] then [Affine(-I, 0), t=-ln(alpha)].
FlowProgram uniform_leaky_flow(double alpha, std::size_t dim);

// Slope alpha on coordinate i (0-based), identity on the others, valid on K.
// alpha < 1 shifts the other coordinates out of the kink region, applies the
// uniform map, and shifts back; alpha > 1 conjugates the reciprocal case by
// sign flips of coordinate i and a partner coordinate (needs d >= 2).
FlowProgram coordinate_leaky_flow(std::size_t i, double alpha, const BoxDomain& k);

// Composition of the coordinate flows for i = 1..d with the box re-tracked
// between factors.
FlowProgram vector_leaky_flow(const LeakySpec& spec);

} // namespace flowforge
