#include "flowforge/leaky.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "flowforge/factor.hpp"
#include "flowforge/serialize.hpp"

namespace flowforge {

namespace {

void internal_check(bool ok, const char* what) {
    if (!ok) throw std::logic_error(std::string("internal invariant violated: ") + what);
}

} // namespace

Vec eval_leaky(const Vec& alpha, const Vec& x) {
    if (alpha.size() != x.size()) fail(Err::DimensionMismatch, "eval_leaky shape");
    Vec y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0.0) y[i] *= alpha[i];
    return y;
}

FlowProgram uniform_leaky_flow(double alpha, std::size_t dim) {
    if (!(alpha > 0.0) || alpha > 1.0)
        fail(Err::AlphaOutOfRange, "uniform slope must lie in (0, 1], got " + fmt_double(alpha));
    FlowProgram prog;
    prog.dim = dim;
    prog.family = Family::F1;
    if (alpha == 1.0) return prog;

    const double t = -std::log(alpha);
    prog.steps.push_back(FlowStep{PrimitiveField::relu(), t});
    Matrix neg_id = -1.0 * Matrix::identity(dim);
    prog.steps.push_back(FlowStep{PrimitiveField::affine(std::move(neg_id), Vec(dim, 0.0)), t});
    return prog;
}

FlowProgram coordinate_leaky_flow(std::size_t i, double alpha, const BoxDomain& k) {
    k.check();
    const std::size_t d = k.dim();
    if (i >= d) fail(Err::DimensionMismatch, "coordinate index out of range");
    if (!(alpha > 0.0)) fail(Err::AlphaOutOfRange, "slope must be positive, got " + fmt_double(alpha));

    FlowProgram prog;
    prog.dim = d;
    prog.family = Family::F1;
    if (alpha == 1.0) return prog;

    if (alpha < 1.0) {
        if (d == 1) return uniform_leaky_flow(alpha, 1);

        // Shift every other coordinate into the positive half-line, where the
        // uniform map is the identity, then undo the shift.
        const double c = k.max_norm() + 1.0;
        Vec shift(d, c);
        shift[i] = 0.0;
        for (std::size_t m = 0; m < d; ++m)
            if (m != i) internal_check(k.lo[m] + c >= 0.0, "shifted coordinate leaves positive cone");

        prog.steps.push_back(FlowStep{PrimitiveField::affine(Matrix(d, d), shift), 1.0});
        for (FlowStep& s : uniform_leaky_flow(alpha, d).steps) prog.steps.push_back(std::move(s));
        Vec unshift(d);
        for (std::size_t m = 0; m < d; ++m) unshift[m] = -shift[m];
        prog.steps.push_back(FlowStep{PrimitiveField::affine(Matrix(d, d), unshift), 1.0});
        return prog;
    }

    // alpha > 1: sigma_alpha(u) = -alpha * sigma_{1/alpha}(-u). Negating a
    // single coordinate is not orientation-preserving, so a partner
    // coordinate is negated alongside and restored by the final linear map.
    if (d == 1)
        fail(Err::DimensionTooSmall,
             "slope > 1 on a single coordinate needs d >= 2 (no admissible negation partner)");
    const std::size_t p = (i + 1) % d;

    Vec neg_diag(d, 1.0);
    neg_diag[i] = -1.0;
    neg_diag[p] = -1.0;
    const FlowProgram flip = compile_affine(Matrix::diag(neg_diag), Vec(d, 0.0));

    BoxDomain flipped = k;
    flipped.lo[i] = -k.hi[i];
    flipped.hi[i] = -k.lo[i];
    flipped.lo[p] = -k.hi[p];
    flipped.hi[p] = -k.lo[p];
    const FlowProgram inner = coordinate_leaky_flow(i, 1.0 / alpha, flipped);

    Vec out_diag(d, 1.0);
    out_diag[i] = -alpha;
    out_diag[p] = -1.0;
    const FlowProgram unflip = compile_affine(Matrix::diag(out_diag), Vec(d, 0.0));

    prog = compose(compose(flip, inner), unflip);
    prog.family = Family::F1;
    return prog;
}

FlowProgram vector_leaky_flow(const LeakySpec& spec) {
    spec.domain.check();
    const std::size_t d = spec.domain.dim();
    if (spec.alpha.size() != d) fail(Err::DimensionMismatch, "vector_leaky_flow shape");
    for (double a : spec.alpha)
        if (!(a > 0.0)) fail(Err::AlphaOutOfRange, "slope must be positive, got " + fmt_double(a));

    FlowProgram prog;
    prog.dim = d;
    prog.family = Family::F1;
    BoxDomain box = spec.domain;
    for (std::size_t i = 0; i < d; ++i) {
        if (spec.alpha[i] == 1.0) continue;
        prog = compose(prog, coordinate_leaky_flow(i, spec.alpha[i], box));
        // Exact image of the box under the coordinate map (monotone per axis).
        const Vec a{spec.alpha[i]};
        box.lo[i] = eval_leaky(a, Vec{box.lo[i]})[0];
        box.hi[i] = eval_leaky(a, Vec{box.hi[i]})[0];
    }
    prog.family = Family::F1;
    return prog;
}

} // namespace flowforge
