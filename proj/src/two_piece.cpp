#include "flowforge/two_piece.hpp"

#include <cmath>

#include "flowforge/factor.hpp"
#include "flowforge/leaky.hpp"
#include "flowforge/serialize.hpp"

namespace flowforge {

namespace {

double sigma(double alpha, double u) {
    return u >= 0.0 ? u : alpha * u;
}

// Entries at or below this are treated as exactly zero when classifying w;
// the induced deviation is far below the compile tolerance.
constexpr double kWeightDust = 1e-14;

struct Interval {
    double lo, hi;
};

Interval ridge_interval(const TwoPieceMapSpec& spec, const BoxDomain& k) {
    double lo = spec.beta, hi = spec.beta;
    for (std::size_t m = 0; m < spec.w.size(); ++m) {
        const double w = spec.w[m];
        if (w >= 0.0) {
            lo += w * k.lo[m];
            hi += w * k.hi[m];
        } else {
            lo += w * k.hi[m];
            hi += w * k.lo[m];
        }
    }
    return {sigma(spec.alpha, lo), sigma(spec.alpha, hi)};
}

} // namespace

void validate_two_piece(const TwoPieceMapSpec& spec) {
    if (spec.dim == 0 || spec.w.size() != spec.dim || spec.j >= spec.dim)
        fail(Err::DimensionMismatch, "two-piece spec shape");
    if (!(spec.alpha > 0.0))
        fail(Err::AlphaOutOfRange, "slope must be positive, got " + fmt_double(spec.alpha));
    const double coupling = std::max(1.0, spec.alpha) * std::fabs(spec.a * spec.w[spec.j]);
    if (!(coupling < 1.0))
        fail(Err::ConditionViolated,
             "max(1,alpha)*|a*w_j| = " + fmt_double(coupling) + " must be < 1");
}

Vec eval_two_piece(const TwoPieceMapSpec& spec, const Vec& x) {
    if (x.size() != spec.dim) fail(Err::DimensionMismatch, "eval_two_piece input length");
    Vec y = x;
    y[spec.j] += spec.a * sigma(spec.alpha, dot(spec.w, x) + spec.beta);
    return y;
}

BoxDomain two_piece_image(const TwoPieceMapSpec& spec, const BoxDomain& k) {
    // Interval enclosure: y_j = x_j + a * sigma(w.x + beta) with the two terms
    // treated independently.
    const Interval s = ridge_interval(spec, k);
    BoxDomain out = k;
    if (spec.a >= 0.0) {
        out.lo[spec.j] += spec.a * s.lo;
        out.hi[spec.j] += spec.a * s.hi;
    } else {
        out.lo[spec.j] += spec.a * s.hi;
        out.hi[spec.j] += spec.a * s.lo;
    }
    return out;
}

namespace {

FlowProgram translation_program(std::size_t d, const Vec& shift) {
    FlowProgram prog;
    prog.dim = d;
    prog.family = Family::F1;
    if (norm_inf(shift) != 0.0)
        prog.steps.push_back(FlowStep{PrimitiveField::affine(Matrix(d, d), shift), 1.0});
    return prog;
}

FlowProgram scale_coord_program(std::size_t d, std::size_t idx, double factor) {
    // Exact positive scaling of one coordinate: generator ln(factor) e_idx.
    FlowProgram prog;
    prog.dim = d;
    prog.family = Family::F1;
    if (factor != 1.0) {
        Matrix gen(d, d);
        gen(idx, idx) = std::log(factor);
        prog.steps.push_back(FlowStep{PrimitiveField::affine(std::move(gen), Vec(d, 0.0)), 1.0});
    }
    return prog;
}

BoxDomain leaky_image(std::size_t idx, double alpha, BoxDomain k) {
    k.lo[idx] = sigma(alpha, k.lo[idx]);
    k.hi[idx] = sigma(alpha, k.hi[idx]);
    return k;
}

BoxDomain scale_image(std::size_t idx, double factor, BoxDomain k) {
    k.lo[idx] *= factor;
    k.hi[idx] *= factor;
    if (k.lo[idx] > k.hi[idx]) std::swap(k.lo[idx], k.hi[idx]);
    return k;
}

// Case 1: w supported on coordinate j only. The map is
// diag(.., lambda at j, ..) composed after sigma_gamma at j.
FlowProgram compile_axis_case(const TwoPieceMapSpec& spec, const BoxDomain& k) {
    const double awj = spec.a * spec.w[spec.j];
    double lambda, gamma;
    if (spec.w[spec.j] > 0.0) {
        lambda = 1.0 + awj;
        gamma = (1.0 + spec.alpha * awj) / lambda;
    } else {
        lambda = 1.0 + spec.alpha * awj;
        gamma = (1.0 + awj) / lambda;
    }
    FlowProgram prog = coordinate_leaky_flow(spec.j, gamma, k);
    return compose(prog, scale_coord_program(spec.dim, spec.j, lambda));
}

// General case: pivot on coordinate l != j carrying the largest weight.
FlowProgram compile_pivot_case(TwoPieceMapSpec spec, BoxDomain box, std::size_t l) {
    const std::size_t d = spec.dim;
    if (spec.w[l] < 0.0) {
        // a*sigma_alpha(w.x) == (-a*alpha)*sigma_{1/alpha}(-w.x); the rewrite
        // preserves the compilability condition and makes the pivot positive.
        spec.a *= -spec.alpha;
        for (double& v : spec.w) v = -v;
        spec.alpha = 1.0 / spec.alpha;
    }

    // F0: row l of the identity replaced by w.
    Matrix r = Matrix::identity(d);
    for (std::size_t m = 0; m < d; ++m) r(l, m) = spec.w[m];
    Matrix r_inv = Matrix::identity(d);
    r_inv(l, l) = 1.0 / spec.w[l];
    for (std::size_t m = 0; m < d; ++m)
        if (m != l) r_inv(l, m) = -spec.w[m] / spec.w[l];

    FlowProgram prog = compile_affine(r, Vec(d, 0.0));
    BoxDomain rbox = box;
    {
        double lo = 0.0, hi = 0.0;
        for (std::size_t m = 0; m < d; ++m) {
            const double w = spec.w[m];
            if (w >= 0.0) {
                lo += w * box.lo[m];
                hi += w * box.hi[m];
            } else {
                lo += w * box.hi[m];
                hi += w * box.lo[m];
            }
        }
        rbox.lo[l] = lo;
        rbox.hi[l] = hi;
    }

    // F1: sigma_alpha on the pivot coordinate.
    prog = compose(prog, coordinate_leaky_flow(l, spec.alpha, rbox));
    rbox = leaky_image(l, spec.alpha, rbox);

    // F2: shear x_j += a x_l (exact nilpotent exponential).
    {
        Matrix gen(d, d);
        gen(spec.j, l) = spec.a;
        FlowProgram shear;
        shear.dim = d;
        shear.family = Family::F1;
        shear.steps.push_back(FlowStep{PrimitiveField::affine(std::move(gen), Vec(d, 0.0)), 1.0});
        prog = compose(prog, shear);
        const double add_lo = spec.a >= 0.0 ? spec.a * rbox.lo[l] : spec.a * rbox.hi[l];
        const double add_hi = spec.a >= 0.0 ? spec.a * rbox.hi[l] : spec.a * rbox.lo[l];
        rbox.lo[spec.j] += add_lo;
        rbox.hi[spec.j] += add_hi;
    }

    // F3: sigma_{1/alpha} restores the pivot coordinate to w.x.
    prog = compose(prog, coordinate_leaky_flow(l, 1.0 / spec.alpha, rbox));
    rbox = leaky_image(l, 1.0 / spec.alpha, rbox);

    // F4: when w_j != 0 the pivot coordinate must be advanced from w.x to
    // w.y = w.x + a w_j sigma_alpha(w.x), itself an axis two-piece map.
    const double awj = spec.a * spec.w[spec.j];
    if (awj != 0.0) {
        const double lambda4 = 1.0 + awj;
        const double gamma4 = (1.0 + spec.alpha * awj) / lambda4;
        prog = compose(prog, coordinate_leaky_flow(l, gamma4, rbox));
        rbox = leaky_image(l, gamma4, rbox);
        prog = compose(prog, scale_coord_program(d, l, lambda4));
        rbox = scale_image(l, lambda4, rbox);
    }

    // F5 = F0^{-1}.
    prog = compose(prog, compile_affine(r_inv, Vec(d, 0.0)));
    prog.family = Family::F1;
    return prog;
}

} // namespace

FlowProgram compile_two_piece(const TwoPieceMapSpec& spec, const BoxDomain& k) {
    validate_two_piece(spec);
    k.check();
    if (k.dim() != spec.dim) fail(Err::DimensionMismatch, "compile_two_piece box dim");

    FlowProgram empty;
    empty.dim = spec.dim;
    empty.family = Family::F1;
    if (spec.a == 0.0) return empty;

    if (norm_inf(spec.w) <= kWeightDust) {
        // Case 0: constant ridge, a pure translation of coordinate j.
        Vec shift(spec.dim, 0.0);
        shift[spec.j] = spec.a * sigma(spec.alpha, spec.beta);
        return translation_program(spec.dim, shift);
    }

    if (spec.beta != 0.0) {
        // Absorb the bias: T = translate(-s) o T0 o translate(+s) with
        // s = beta w / |w|^2, where T0 is the bias-free map.
        const double w2 = dot(spec.w, spec.w);
        Vec s(spec.dim);
        for (std::size_t m = 0; m < spec.dim; ++m) s[m] = spec.beta * spec.w[m] / w2;
        TwoPieceMapSpec inner = spec;
        inner.beta = 0.0;
        BoxDomain shifted = k;
        for (std::size_t m = 0; m < spec.dim; ++m) {
            shifted.lo[m] += s[m];
            shifted.hi[m] += s[m];
        }
        FlowProgram prog = translation_program(spec.dim, s);
        prog = compose(prog, compile_two_piece(inner, shifted));
        Vec back(spec.dim);
        for (std::size_t m = 0; m < spec.dim; ++m) back[m] = -s[m];
        return compose(prog, translation_program(spec.dim, back));
    }

    std::size_t l = spec.j;
    double best = 0.0;
    for (std::size_t m = 0; m < spec.dim; ++m) {
        if (m == spec.j) continue;
        if (std::fabs(spec.w[m]) > best) {
            best = std::fabs(spec.w[m]);
            l = m;
        }
    }
    if (best <= kWeightDust * std::max(1.0, std::fabs(spec.w[spec.j])))
        return compile_axis_case(spec, k);
    return compile_pivot_case(spec, k, l);
}

} // namespace flowforge
