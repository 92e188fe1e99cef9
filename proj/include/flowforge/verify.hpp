#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flowforge/program.hpp"

namespace flowforge {

using MapFn = std::function<Vec(const Vec&)>;
// Time-dependent vector field handle v(x, t).
using FieldFn = std::function<Vec(const Vec&, double)>;

struct ErrorReport {
    std::string metric; // "sup" | "lp"
    double p = 0.0;     // exponent; +inf for the sup metric
    double value = 0.0;
    std::uint64_t points = 0;
    std::uint64_t seed = 0;

    static const char* csv_header() { return "metric,p,value,points,seed"; }
    std::string csv_row() const;
};

// Counter-based generator: sample i of a stream is a pure function of
// (seed, i), so parallel fills and reruns agree bit-for-bit.
struct CounterRng {
    std::uint64_t seed = 0;

    std::uint64_t bits(std::uint64_t counter) const;
    double uniform(std::uint64_t counter) const; // [0, 1)
    double uniform(std::uint64_t counter, double lo, double hi) const;
};

// Runs fn(0..n-1), possibly on several threads. FLOWFORGE_THREADS caps the
// worker count; fn must be safe to call concurrently for distinct indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Classical fixed-step RK4. When breakpoints are supplied (piecewise-constant
// fields), integration is segmented so no step straddles a discontinuity.
Vec integrate_rk4(const FieldFn& field, Vec x0, double t0, double t1, int steps,
                  const std::vector<double>& breakpoints = {});

// Independent oracle for a whole program: RK4 on each step's own field.
Vec rk4_program(const FlowProgram& prog, Vec x, int steps_per_step = 1024);

std::vector<Vec> grid_points(const BoxDomain& k, std::size_t per_axis);
// Default measurement resolution per dimension: 101 (d=1), 15 (d=2), 7 (d=3);
// d >= 4 uses Monte Carlo sampling instead of grids.
std::size_t default_points_per_axis(std::size_t d);
std::vector<Vec> sample_points(const BoxDomain& k, std::size_t n, std::uint64_t seed);

ErrorReport sup_error_points(const MapFn& a, const MapFn& b, const std::vector<Vec>& pts);
ErrorReport sup_error(const MapFn& a, const MapFn& b, const BoxDomain& k, std::size_t per_axis);
// Monte Carlo estimate of (integral of |a-b|_inf^p over K)^(1/p).
ErrorReport lp_error(const MapFn& a, const MapFn& b, const BoxDomain& k, double p,
                     std::size_t n_samples, std::uint64_t seed);

// Field-gap budget that certifies a flow gap of eps over horizon tau for
// L-Lipschitz fields: min(1, eps / (tau * e^(L tau))).
double gronwall_delta(double eps, double tau, double L);

// Expands K by radius (V+1) * tau * e^(L tau) per side: a box that contains
// every trajectory started in K under any field bounded by V and L-Lipschitz.
BoxDomain inflate_domain(const BoxDomain& k, double tau, double L, double V);

// Determinant of the central-difference Jacobian at x.
double jacobian_det(const MapFn& map, const Vec& x, double h = 1e-5);

// True iff all second differences of the (1-d) map on a uniform grid are
// >= -1e-8.
bool convexity_check_1d(const MapFn& map, double lo, double hi, std::size_t n_grid);

} // namespace flowforge
