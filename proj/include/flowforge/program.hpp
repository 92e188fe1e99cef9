#pragma once

#include <cstddef>
#include <vector>

#include "flowforge/linalg.hpp"

namespace flowforge {

enum class FieldKind { Affine, ReLU, NegReLU };

// Tagged union of the primitive vector fields: x -> A x + b, the ReLU field
// x -> relu(x), and its negation.
struct PrimitiveField {
    FieldKind kind = FieldKind::Affine;
    Matrix A; // Affine only
    Vec b;    // Affine only

    static PrimitiveField affine(Matrix a, Vec b);
    static PrimitiveField relu() { return PrimitiveField{FieldKind::ReLU, {}, {}}; }
    static PrimitiveField negrelu() { return PrimitiveField{FieldKind::NegReLU, {}, {}}; }

    // Field negation: affine negates (A, b); ReLU and NegReLU swap.
    PrimitiveField negated() const;
};

struct FlowStep {
    PrimitiveField field;
    double duration = 0.0;
};

enum class Family { F0, F1, F2 };

const char* family_name(Family f);
Family family_join(Family a, Family b);

// An ordered composition of primitive flows; steps apply first-to-last.
struct FlowProgram {
    std::size_t dim = 0;
    Family family = Family::F0;
    std::vector<FlowStep> steps;
};

// Axis-aligned compact box standing in for the domain the compilers certify.
struct BoxDomain {
    Vec lo, hi;

    std::size_t dim() const { return lo.size(); }
    static BoxDomain cube(std::size_t d, double low, double high);
    void check() const; // lo_i <= hi_i, finite, nonempty
    bool contains(const Vec& x, double tol = 0.0) const;
    // Largest coordinate magnitude over the box.
    double max_norm() const;
    double volume() const;
    BoxDomain inflated(double r) const;
};

// Throws DimensionMismatch / FamilyViolation / NegativeDuration /
// NonFiniteInput when a type invariant fails.
void validate_program(const FlowProgram& prog);

// Closed-form flow of one step: matrix exponential for affine fields, the
// exact piecewise-linear form for the +-ReLU fields.
Vec eval_step(const FlowStep& step, const Vec& x);

Vec eval_program(const FlowProgram& prog, Vec x);

// Concatenation: compose(a, b) runs a first, so it evaluates as b after a.
FlowProgram compose(const FlowProgram& a, const FlowProgram& b);

// Precomputed per-step closed forms; use for repeated evaluation of the same
// program (grids, Monte Carlo) so each affine exponential is taken once.
struct StepKernel {
    FieldKind kind = FieldKind::Affine;
    Matrix W; // affine
    Vec c;    // affine
    double scale = 1.0; // +-ReLU: factor applied to nonnegative coordinates
};

class Evaluator {
  public:
    explicit Evaluator(const FlowProgram& prog);

    std::size_t dim() const { return dim_; }
    Vec operator()(Vec x) const;

    // Also reports the smallest coordinate magnitude fed into any +-ReLU
    // step, i.e. the distance to the nearest kink along the evaluation; a
    // comfortable margin certifies that finite-difference stencils around x
    // never straddle a kink.
    Vec eval_with_margin(Vec x, double* margin) const;

    // Interval-arithmetic over-approximation of the image of a box.
    BoxDomain image(BoxDomain box) const;

  private:
    std::size_t dim_ = 0;
    std::vector<StepKernel> kernels_;
};

} // namespace flowforge
