#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flowforge/program.hpp"
#include "flowforge/verify.hpp"

namespace flowforge {

// One constant-in-time piece of a piecewise-constant neural ODE
//   x'(t) = S(t) sigma_alpha(W(t) x + b(t)),   t in [0, tau).
// S is dim x width, W is width x dim, b has length width.  The piece is
// active from `t_start` until the next piece (or tau).
struct NeuralODEPiece {
    double t_start = 0.0;
    Matrix s;
    Matrix w;
    Vec b;
};

struct NeuralODESpec {
    std::size_t dim = 0;
    std::size_t width = 0;
    double alpha = 1.0;
    double tau = 0.0;
    std::vector<NeuralODEPiece> pieces;
};

void validate_neural_ode(const NeuralODESpec& spec);

// Right-hand side at time t (right-continuous in t).  Throws TimeOutOfRange
// outside [0, tau].
Vec neural_ode_field(const NeuralODESpec& spec, const Vec& x, double t);

// Piece boundaries strictly inside (0, tau), for integrators.
std::vector<double> piece_breakpoints(const NeuralODESpec& spec);

// M = max over pieces, neurons i, coordinates j of |S_{j,i} W_{i,j}|.
// The splitting step count must exceed tau * M.
double coupling_bound(const NeuralODESpec& spec);

// Crude Lipschitz bound: width * max_i |s_i|_2 |w_i|_2 over all pieces.
double lipschitz_bound(const NeuralODESpec& spec);

// Max field norm over a sample grid on k (and over piece start times).
double field_sup_bound(const NeuralODESpec& spec, const BoxDomain& k);

struct SplitReport {
    std::size_t n = 0;        // sub-steps
    double dt = 0.0;          // tau / n
    double coupling = 0.0;    // M
    double lipschitz = 0.0;   // L
    double field_sup = 0.0;   // V
    BoxDomain work_box;       // inflated domain the factors were compiled on
    std::size_t step_count = 0;
    double err_chain = 0.0;   // sup gap vs the exact split composition
    double err_rk4 = 0.0;     // sup gap vs a reference integration
};

struct SplitResult {
    FlowProgram program;
    SplitReport report;
};

// Compile the time-tau flow with n splitting sub-steps.  Requires n > tau*M.
SplitResult compile_neural_ode(const NeuralODESpec& spec, const BoxDomain& k, std::size_t n);

// Double n from a feasible starting point until the reference error on k is
// at most eps.  Throws BudgetExceeded past max_n.
SplitResult auto_compile_neural_ode(const NeuralODESpec& spec, const BoxDomain& k, double eps,
                                    std::size_t max_n = std::size_t{1} << 20);

// The exact split composition at resolution n (oracle for err_chain).
Vec eval_split_chain(const NeuralODESpec& spec, const Vec& x, std::size_t n);

NeuralODESpec parse_neural_ode(const std::string& text);
std::string serialize_neural_ode(const NeuralODESpec& spec);

} // namespace flowforge
