#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "flowforge/program.hpp"

namespace flowforge {

// One term of a nonnegatively weighted field sum  sum_i weight_i * field_i.
struct WeightedField {
    double weight = 0.0;
    PrimitiveField field;
};

// First-order Lie product formula: n cycles, each running every term for
// weight_i * tau / n in order.  Error decays like O(tau^2 / n).
FlowProgram product_formula_program(std::size_t dim, const std::vector<WeightedField>& terms,
                                    double tau, std::size_t n);

// Commutator approximation: the four-step cycle f, g, -f, -g, each for
// sqrt(tau), approaches the time-tau flow of the Lie bracket [f, g] with
// error O(tau^{3/2}).
FlowProgram commutator_program(std::size_t dim, const PrimitiveField& f, const PrimitiveField& g,
                               double tau);

// Time-tau flow of the rank-one field  v(x) = s * relu(w * x_j * [i==j] + b_i) e_i,
// realized inside a zoom conjugation of strength lambda > max(1, |w|).  The
// box k is the domain the inner piecewise factors are certified on.
FlowProgram restricted_rescale(double s, std::size_t i, std::size_t j, double w, const Vec& b,
                               double tau, double lambda, const BoxDomain& k);

using ScalarFn = std::function<double(double)>;

// Affine reparametrization g(x) = d_coef * p(shift + mu * x) + c_coef that
// zooms a scalar map into its linearization at shift: g approximates the
// identity on [-1, 1] and magnifies a delta-neighborhood by factor m.
struct ZoomResult {
    double d_coef = 0.0;
    double mu = 0.0;
    double shift = 0.0;
    double c_coef = 0.0;
    double delta = 0.0;
    double deriv = 0.0;   // central-difference p'(shift)
    double sup_dev = 0.0; // sup |g(x) - x| on a uniform grid over [-1, 1]
};

ZoomResult zoom_with_delta(const ScalarFn& p, double xi, double m, double delta,
                           std::size_t n_samples = 201);

// Shrinks delta by bisection until the grid deviation is at most target_dev.
ZoomResult zoom_linearize(const ScalarFn& p, double xi, double m, double target_dev,
                          std::size_t n_samples = 201);

// Lower bound on the uniform distance from the sampled function to every
// convex function on the same grid: half the largest chord violation over
// point triples.
double convex_gap_floor(const Vec& xs, const Vec& ys);

} // namespace flowforge
