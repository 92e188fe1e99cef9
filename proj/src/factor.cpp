#include "flowforge/factor.hpp"

#include <cmath>

#include "flowforge/serialize.hpp"

namespace flowforge {

namespace {

constexpr double kPivotEps = 1e-8;
constexpr double kSingularEps = 1e-10;

} // namespace

Matrix ShearFactor::matrix(std::size_t d) const {
    Matrix u = Matrix::identity(d);
    u(i, j) = lambda;
    return u;
}

Matrix EliminationCertificate::lambda_matrix() const {
    return Matrix::diag(diag);
}

Matrix EliminationCertificate::sign_matrix() const {
    Vec s(signs.size());
    for (std::size_t i = 0; i < signs.size(); ++i) s[i] = signs[i];
    return Matrix::diag(s);
}

Matrix EliminationCertificate::reduce(const Matrix& w) const {
    Matrix m = w;
    for (const ShearFactor& f : factors) m = f.matrix(dim) * m;
    return m;
}

EliminationCertificate eliminate(const Matrix& w) {
    if (!w.square()) fail(Err::DimensionMismatch, "eliminate needs a square matrix");
    if (!all_finite(w)) fail(Err::NonFiniteInput, "eliminate: non-finite entries");
    const std::size_t n = w.rows;

    EliminationCertificate cert;
    cert.dim = n;
    cert.det_w = det(w);
    if (std::fabs(cert.det_w) <= kSingularEps)
        fail(Err::SingularMatrix, "determinant " + fmt_double(cert.det_w) + " within 1e-10 of zero");
    if (cert.det_w < 0.0)
        fail(Err::NegativeDeterminant,
             "determinant " + fmt_double(cert.det_w) + " is negative; not orientation-preserving");

    Matrix m = w;
    auto apply_shear = [&](std::size_t i, std::size_t j, double lambda) {
        // row_i += lambda * row_j
        for (std::size_t c = 0; c < n; ++c) m(i, c) += lambda * m(j, c);
        cert.factors.push_back(ShearFactor{i, j, lambda});
    };

    // Gauss-Jordan sweep to a diagonal using shears only. After column c is
    // processed, rows 0..c have zeros in columns 0..c except the diagonal, so
    // pivot repair below must (and can) borrow from rows r > c.
    for (std::size_t c = 0; c < n; ++c) {
        if (std::fabs(m(c, c)) < kPivotEps) {
            std::size_t best = c;
            double best_mag = std::fabs(m(c, c));
            for (std::size_t r = c + 1; r < n; ++r) {
                if (std::fabs(m(r, c)) > best_mag) {
                    best = r;
                    best_mag = std::fabs(m(r, c));
                }
            }
            if (best != c) apply_shear(c, best, 1.0);
            if (m(c, c) == 0.0)
                fail(Err::SingularMatrix, "column " + std::to_string(c) + " has no usable pivot");
        }
        const double pivot = m(c, c);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || m(r, c) == 0.0) continue;
            apply_shear(r, c, -m(r, c) / pivot);
            m(r, c) = 0.0; // exact by construction
        }
    }

    cert.diag.resize(n);
    cert.signs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = m(i, i);
        cert.diag[i] = std::fabs(v);
        cert.signs[i] = v < 0.0 ? -1 : 1;
    }
    int negatives = 0;
    for (int s : cert.signs) negatives += s < 0 ? 1 : 0;
    if (negatives % 2 != 0)
        fail(Err::OddNegativeCount, "shear reduction flipped orientation"); // unreachable for det>0
    return cert;
}

FlowProgram compile_affine(const Matrix& w, const Vec& b) {
    if (w.rows != b.size()) fail(Err::DimensionMismatch, "compile_affine shape");
    const EliminationCertificate cert = eliminate(w);
    const std::size_t n = cert.dim;

    FlowProgram prog;
    prog.dim = n;
    prog.family = Family::F0;
    const Vec zero(n, 0.0);

    auto push_affine = [&](Matrix gen) {
        if (max_abs(gen) == 0.0) return; // identity factor
        prog.steps.push_back(FlowStep{PrimitiveField::affine(std::move(gen), zero), 1.0});
    };

    push_affine(log_signed_diag(cert.sign_matrix()));

    Matrix diag_log(n, n);
    for (std::size_t i = 0; i < n; ++i) diag_log(i, i) = std::log(cert.diag[i]);
    push_affine(std::move(diag_log));

    for (std::size_t k = cert.factors.size(); k-- > 0;) {
        const ShearFactor& f = cert.factors[k];
        Matrix gen(n, n);
        gen(f.i, f.j) = -f.lambda;
        push_affine(std::move(gen));
    }

    if (norm_inf(b) != 0.0)
        prog.steps.push_back(FlowStep{PrimitiveField::affine(Matrix(n, n), b), 1.0});

    validate_program(prog);
    return prog;
}

} // namespace flowforge
