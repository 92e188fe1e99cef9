#include "flowforge/program.hpp"

#include <cmath>
#include <string>

namespace flowforge {

PrimitiveField PrimitiveField::affine(Matrix a, Vec b) {
    PrimitiveField f;
    f.kind = FieldKind::Affine;
    f.A = std::move(a);
    f.b = std::move(b);
    return f;
}

PrimitiveField PrimitiveField::negated() const {
    switch (kind) {
        case FieldKind::Affine: return affine(-1.0 * A, [this] {
            Vec nb = b;
            for (double& v : nb) v = -v;
            return nb;
        }());
        case FieldKind::ReLU: return negrelu();
        case FieldKind::NegReLU: return relu();
    }
    return {};
}

const char* family_name(Family f) {
    switch (f) {
        case Family::F0: return "F0";
        case Family::F1: return "F1";
        case Family::F2: return "F2";
    }
    return "?";
}

Family family_join(Family a, Family b) {
    return static_cast<Family>(std::max(static_cast<int>(a), static_cast<int>(b)));
}

BoxDomain BoxDomain::cube(std::size_t d, double low, double high) {
    BoxDomain k;
    k.lo.assign(d, low);
    k.hi.assign(d, high);
    k.check();
    return k;
}

void BoxDomain::check() const {
    if (lo.empty() || lo.size() != hi.size()) fail(Err::DimensionMismatch, "box bounds shape");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            fail(Err::NonFiniteInput, "box bounds must be finite");
        if (lo[i] > hi[i]) fail(Err::DimensionMismatch, "box has lo > hi");
    }
}

bool BoxDomain::contains(const Vec& x, double tol) const {
    if (x.size() != lo.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
}

double BoxDomain::max_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i)
        m = std::max({m, std::fabs(lo[i]), std::fabs(hi[i])});
    return m;
}

double BoxDomain::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
}

BoxDomain BoxDomain::inflated(double r) const {
    BoxDomain out = *this;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        out.lo[i] -= r;
        out.hi[i] += r;
    }
    return out;
}

void validate_program(const FlowProgram& prog) {
    if (prog.dim == 0) fail(Err::DimensionMismatch, "program dimension must be positive");
    for (std::size_t s = 0; s < prog.steps.size(); ++s) {
        const FlowStep& step = prog.steps[s];
        const std::string at = "step " + std::to_string(s);
        if (!std::isfinite(step.duration)) fail(Err::NonFiniteInput, at + ": duration not finite");
        if (step.duration < 0.0) fail(Err::NegativeDuration, at);
        switch (step.field.kind) {
            case FieldKind::Affine:
                if (step.field.A.rows != prog.dim || step.field.A.cols != prog.dim ||
                    step.field.b.size() != prog.dim)
                    fail(Err::DimensionMismatch, at + ": affine field shape");
                if (!all_finite(step.field.A) || !all_finite(step.field.b))
                    fail(Err::NonFiniteInput, at + ": affine field entries");
                break;
            case FieldKind::ReLU:
                if (prog.family == Family::F0) fail(Err::FamilyViolation, at + ": relu step in F0");
                break;
            case FieldKind::NegReLU:
                if (prog.family != Family::F2) fail(Err::FamilyViolation, at + ": negrelu step outside F2");
                break;
        }
    }
}

namespace {

StepKernel make_kernel(const FlowStep& step) {
    StepKernel k;
    k.kind = step.field.kind;
    switch (step.field.kind) {
        case FieldKind::Affine: {
            AffineKernel ak = affine_flow_matrices(step.field.A, step.field.b, step.duration);
            k.W = std::move(ak.W);
            k.c = std::move(ak.c);
            break;
        }
        case FieldKind::ReLU:
            k.scale = std::exp(step.duration);
            break;
        case FieldKind::NegReLU:
            k.scale = std::exp(-step.duration);
            break;
    }
    return k;
}

void apply_kernel(const StepKernel& k, Vec& x, Vec& scratch) {
    if (k.kind == FieldKind::Affine) {
        scratch.assign(x.size(), 0.0);
        for (std::size_t i = 0; i < k.W.rows; ++i) {
            double acc = k.c[i];
            for (std::size_t j = 0; j < k.W.cols; ++j) acc += k.W(i, j) * x[j];
            scratch[i] = acc;
        }
        x.swap(scratch);
    } else {
        // Negative coordinates are exact fixed points of both +-ReLU flows.
        for (double& v : x)
            if (v >= 0.0) v *= k.scale;
    }
}

} // namespace

Vec eval_step(const FlowStep& step, const Vec& x) {
    if (!all_finite(x)) fail(Err::NonFiniteInput, "eval_step input");
    StepKernel k = make_kernel(step);
    Vec y = x, scratch;
    apply_kernel(k, y, scratch);
    return y;
}

Vec eval_program(const FlowProgram& prog, Vec x) {
    if (x.size() != prog.dim) fail(Err::DimensionMismatch, "eval_program input length");
    for (const FlowStep& s : prog.steps) x = eval_step(s, x);
    return x;
}

FlowProgram compose(const FlowProgram& a, const FlowProgram& b) {
    if (a.dim != b.dim) fail(Err::DimensionMismatch, "compose dims differ");
    FlowProgram out;
    out.dim = a.dim;
    out.family = family_join(a.family, b.family);
    out.steps = a.steps;
    out.steps.insert(out.steps.end(), b.steps.begin(), b.steps.end());
    return out;
}

Evaluator::Evaluator(const FlowProgram& prog) : dim_(prog.dim) {
    validate_program(prog);
    kernels_.reserve(prog.steps.size());
    for (const FlowStep& s : prog.steps) kernels_.push_back(make_kernel(s));
}

Vec Evaluator::operator()(Vec x) const {
    if (x.size() != dim_) fail(Err::DimensionMismatch, "evaluator input length");
    Vec scratch;
    for (const StepKernel& k : kernels_) apply_kernel(k, x, scratch);
    return x;
}

Vec Evaluator::eval_with_margin(Vec x, double* margin) const {
    if (x.size() != dim_) fail(Err::DimensionMismatch, "evaluator input length");
    double m = std::numeric_limits<double>::infinity();
    Vec scratch;
    for (const StepKernel& k : kernels_) {
        if (k.kind != FieldKind::Affine)
            for (double v : x) m = std::min(m, std::fabs(v));
        apply_kernel(k, x, scratch);
    }
    if (margin) *margin = m;
    return x;
}

BoxDomain Evaluator::image(BoxDomain box) const {
    box.check();
    if (box.dim() != dim_) fail(Err::DimensionMismatch, "evaluator box dim");
    for (const StepKernel& k : kernels_) {
        if (k.kind == FieldKind::Affine) {
            BoxDomain next = box;
            for (std::size_t i = 0; i < dim_; ++i) {
                double lo = k.c[i], hi = k.c[i];
                for (std::size_t j = 0; j < dim_; ++j) {
                    const double w = k.W(i, j);
                    if (w >= 0.0) {
                        lo += w * box.lo[j];
                        hi += w * box.hi[j];
                    } else {
                        lo += w * box.hi[j];
                        hi += w * box.lo[j];
                    }
                }
                next.lo[i] = lo;
                next.hi[i] = hi;
            }
            box = next;
        } else {
            // Monotone increasing in each coordinate, so endpoints map to
            // endpoints.
            for (std::size_t i = 0; i < dim_; ++i) {
                box.lo[i] = box.lo[i] >= 0.0 ? box.lo[i] * k.scale : box.lo[i];
                box.hi[i] = box.hi[i] >= 0.0 ? box.hi[i] * k.scale : box.hi[i];
            }
        }
    }
    return box;
}

} // namespace flowforge
