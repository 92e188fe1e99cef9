#include "flowforge/lab.hpp"

#include <algorithm>
#include <cmath>

#include "flowforge/leaky.hpp"
#include "flowforge/serialize.hpp"

namespace flowforge {

namespace {

Family kind_family(FieldKind k) {
    switch (k) {
    case FieldKind::Affine: return Family::F0;
    case FieldKind::ReLU: return Family::F1;
    case FieldKind::NegReLU: return Family::F2;
    }
    return Family::F2;
}

void append(FlowProgram& prog, FlowProgram part) {
    for (FlowStep& st : part.steps) prog.steps.push_back(std::move(st));
}

FlowStep translate_step(std::size_t d, const Vec& shift) {
    return FlowStep{PrimitiveField::affine(Matrix(d, d), shift), 1.0};
}

FlowStep scale_step(std::size_t d, std::size_t idx, double log_factor) {
    Matrix gen(d, d);
    gen(idx, idx) = log_factor;
    return FlowStep{PrimitiveField::affine(std::move(gen), Vec(d, 0.0)), 1.0};
}

} // namespace

FlowProgram product_formula_program(std::size_t dim, const std::vector<WeightedField>& terms,
                                    double tau, std::size_t n) {
    if (dim == 0) fail(Err::DimensionMismatch, "product formula needs positive dim");
    if (!std::isfinite(tau)) fail(Err::NonFiniteInput, "tau must be finite");
    if (tau < 0.0) fail(Err::NegativeDuration, "tau must be nonnegative");
    FlowProgram prog;
    prog.dim = dim;
    prog.family = Family::F0;
    for (const WeightedField& term : terms) {
        if (!std::isfinite(term.weight) || term.weight < 0.0)
            fail(Err::NegativeCoefficient,
                 "weights must be nonnegative, got " + fmt_double(term.weight));
        prog.family = family_join(prog.family, kind_family(term.field.kind));
    }
    if (tau == 0.0 || terms.empty()) return prog;
    if (n == 0) fail(Err::ConditionViolated, "product formula needs at least one cycle");
    const double dt = tau / static_cast<double>(n);
    prog.steps.reserve(n * terms.size());
    for (std::size_t cycle = 0; cycle < n; ++cycle)
        for (const WeightedField& term : terms)
            if (term.weight > 0.0) prog.steps.push_back(FlowStep{term.field, term.weight * dt});
    validate_program(prog);
    return prog;
}

FlowProgram commutator_program(std::size_t dim, const PrimitiveField& f, const PrimitiveField& g,
                               double tau) {
    if (dim == 0) fail(Err::DimensionMismatch, "commutator needs positive dim");
    if (!std::isfinite(tau)) fail(Err::NonFiniteInput, "tau must be finite");
    if (tau < 0.0) fail(Err::NegativeDuration, "tau must be nonnegative");
    FlowProgram prog;
    prog.dim = dim;
    prog.family = family_join(kind_family(f.kind), kind_family(g.kind));
    if (f.kind != FieldKind::Affine || g.kind != FieldKind::Affine)
        prog.family = Family::F2; // a negated ReLU appears below
    if (tau == 0.0) return prog;
    const double r = std::sqrt(tau);
    prog.steps = {FlowStep{f, r}, FlowStep{g, r}, FlowStep{f.negated(), r},
                  FlowStep{g.negated(), r}};
    validate_program(prog);
    return prog;
}

FlowProgram restricted_rescale(double s, std::size_t i, std::size_t j, double w, const Vec& b,
                               double tau, double lambda, const BoxDomain& k) {
    const std::size_t d = b.size();
    k.check();
    if (d == 0 || k.dim() != d || i >= d || j >= d)
        fail(Err::DimensionMismatch, "restricted_rescale shape");
    if (!std::isfinite(s) || !std::isfinite(w) || !all_finite(b))
        fail(Err::NonFiniteInput, "restricted_rescale parameters");
    if (!std::isfinite(tau)) fail(Err::NonFiniteInput, "tau must be finite");
    if (tau < 0.0) fail(Err::NegativeDuration, "tau must be nonnegative");
    if (!(lambda > std::max(1.0, std::fabs(w))))
        fail(Err::LambdaTooSmall, "lambda = " + fmt_double(lambda) +
                                      " must exceed max(1, |w|) = " +
                                      fmt_double(std::max(1.0, std::fabs(w))));

    FlowProgram prog;
    prog.dim = d;
    prog.family = Family::F1;
    const double log_lambda = std::log(lambda);
    prog.steps.push_back(scale_step(d, j, log_lambda));

    BoxDomain box = k;
    box.lo[j] *= lambda;
    box.hi[j] *= lambda;

    const double t_mid = std::fabs(s) * (i == j ? lambda : 1.0) * tau;
    if (t_mid > 0.0) {
        if (i != j || w == 0.0) {
            // The ridge argument is the constant b_i, so the zoomed field is a
            // constant translation along e_i.
            const double amount = (s >= 0.0 ? t_mid : -t_mid) * std::max(b[i], 0.0);
            if (amount != 0.0) {
                Vec shift(d, 0.0);
                shift[i] = amount;
                prog.steps.push_back(translate_step(d, shift));
            }
        } else {
            // One-dimensional ridge ODE along e_j: recentre so the kink sits at
            // the origin, apply the exact leaky/scaling pair, recentre back.
            const double u = w / lambda;
            const double kappa = (s >= 0.0 ? 1.0 : -1.0) * u;
            const double centre = b[j] / u;
            Vec shift(d, 0.0);
            shift[j] = centre;
            prog.steps.push_back(translate_step(d, shift));
            box.lo[j] += centre;
            box.hi[j] += centre;
            const double growth = kappa * t_mid;
            if (u > 0.0) {
                append(prog, coordinate_leaky_flow(j, std::exp(-growth), box));
                prog.steps.push_back(scale_step(d, j, growth));
            } else {
                append(prog, coordinate_leaky_flow(j, std::exp(growth), box));
            }
            shift[j] = -centre;
            prog.steps.push_back(translate_step(d, shift));
        }
    }

    prog.steps.push_back(scale_step(d, j, -log_lambda));
    validate_program(prog);
    return prog;
}

ZoomResult zoom_with_delta(const ScalarFn& p, double xi, double m, double delta,
                           std::size_t n_samples) {
    if (!(m > 1.0)) fail(Err::ConditionViolated, "zoom factor m must exceed 1");
    if (!(delta > 0.0) || !std::isfinite(delta))
        fail(Err::ConditionViolated, "delta must be positive and finite");
    if (n_samples < 2) fail(Err::ConditionViolated, "need at least two samples");

    const double h = 1e-6 * std::max(1.0, std::fabs(xi));
    const double deriv = (p(xi + h) - p(xi - h)) / (2.0 * h);
    if (!std::isfinite(deriv) || !(std::fabs(deriv) > 1e-6))
        fail(Err::ZeroDerivative,
             "derivative at the anchor is " + fmt_double(deriv) + "; cannot zoom");

    ZoomResult res;
    res.deriv = deriv;
    res.delta = delta;
    res.mu = delta / m;
    res.shift = xi;
    res.d_coef = m / (deriv * delta);
    res.c_coef = -res.d_coef * p(xi);
    double dev = 0.0;
    for (std::size_t idx = 0; idx < n_samples; ++idx) {
        const double x =
            -1.0 + 2.0 * static_cast<double>(idx) / static_cast<double>(n_samples - 1);
        const double g = res.d_coef * p(res.shift + res.mu * x) + res.c_coef;
        if (!std::isfinite(g)) fail(Err::NonFiniteState, "zoomed map is non-finite");
        dev = std::max(dev, std::fabs(g - x));
    }
    res.sup_dev = dev;
    return res;
}

ZoomResult zoom_linearize(const ScalarFn& p, double xi, double m, double target_dev,
                          std::size_t n_samples) {
    if (!(target_dev > 0.0)) fail(Err::ConditionViolated, "deviation target must be positive");
    double hi = 1.0;
    ZoomResult res = zoom_with_delta(p, xi, m, hi, n_samples);
    if (res.sup_dev <= target_dev) return res;
    double lo = hi;
    ZoomResult best = res;
    bool found = false;
    for (int tries = 0; tries < 200 && !found; ++tries) {
        lo *= 0.5;
        best = zoom_with_delta(p, xi, m, lo, n_samples);
        found = best.sup_dev <= target_dev;
    }
    if (!found)
        fail(Err::BudgetExceeded, "no delta met the deviation target " + fmt_double(target_dev));
    for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const ZoomResult trial = zoom_with_delta(p, xi, m, mid, n_samples);
        if (trial.sup_dev <= target_dev) {
            lo = mid;
            best = trial;
        } else {
            hi = mid;
        }
    }
    return best;
}

double convex_gap_floor(const Vec& xs, const Vec& ys) {
    if (xs.size() != ys.size()) fail(Err::DimensionMismatch, "convex_gap_floor grid shape");
    const std::size_t n = xs.size();
    double best = 0.0;
    for (std::size_t i = 0; i + 2 < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            const double span = xs[j] - xs[i];
            if (!(span > 0.0)) fail(Err::ConditionViolated, "grid must be strictly increasing");
            for (std::size_t mid = i + 1; mid < j; ++mid) {
                const double theta = (xs[j] - xs[mid]) / span;
                const double chord = theta * ys[i] + (1.0 - theta) * ys[j];
                best = std::max(best, 0.5 * (ys[mid] - chord));
            }
        }
    return best;
}

} // namespace flowforge
