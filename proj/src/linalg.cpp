#include "flowforge/linalg.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

namespace flowforge {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const Vec& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) fail(Err::DimensionMismatch, "matrix product shape");
    Matrix out(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = 0; k < x.cols; ++k) {
            const double xi = x(i, k);
            if (xi == 0.0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += xi * y(k, j);
        }
    }
    return out;
}

Matrix operator+(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) fail(Err::DimensionMismatch, "matrix sum shape");
    Matrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

Matrix operator-(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) fail(Err::DimensionMismatch, "matrix diff shape");
    Matrix out = x;
    for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
    return out;
}

Matrix operator*(double s, const Matrix& x) {
    Matrix out = x;
    for (double& v : out.a) v *= s;
    return out;
}

bool operator==(const Matrix& x, const Matrix& y) {
    return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
}

Vec matvec(const Matrix& m, const Vec& x) {
    if (m.cols != x.size()) fail(Err::DimensionMismatch, "matvec shape");
    Vec out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += m(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

double dot(const Vec& x, const Vec& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double norm_inf(const Vec& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

double norm2(const Vec& x) {
    return std::sqrt(dot(x, x));
}

bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Matrix& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

double norm1(const Matrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) s += std::fabs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.a) best = std::max(best, std::fabs(v));
    return best;
}

double det(Matrix m) {
    if (!m.square()) fail(Err::DimensionMismatch, "det needs a square matrix");
    const std::size_t n = m.rows;
    double d = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(m(r, c)) > std::fabs(m(piv, c))) piv = r;
        if (m(piv, c) == 0.0) return 0.0;
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
            d = -d;
        }
        d *= m(c, c);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m(r, c) / m(c, c);
            if (f == 0.0) continue;
            for (std::size_t j = c; j < n; ++j) m(r, j) -= f * m(c, j);
        }
    }
    return d;
}

Matrix solve(Matrix a, Matrix rhs) {
    if (!a.square() || a.rows != rhs.rows) fail(Err::DimensionMismatch, "solve shape");
    const std::size_t n = a.rows;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a(r, c)) > std::fabs(a(piv, c))) piv = r;
        if (a(piv, c) == 0.0) fail(Err::SingularMatrix, "solve: zero pivot");
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(piv, j), a(c, j));
            for (std::size_t j = 0; j < rhs.cols; ++j) std::swap(rhs(piv, j), rhs(c, j));
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a(r, c) / a(c, c);
            if (f == 0.0) continue;
            for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
            for (std::size_t j = 0; j < rhs.cols; ++j) rhs(r, j) -= f * rhs(c, j);
        }
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < rhs.cols; ++j) rhs(r, j) /= a(r, r);
    return rhs;
}

Matrix inverse(const Matrix& m) {
    return solve(m, Matrix::identity(m.rows));
}

Matrix expm(const Matrix& a) {
    if (!a.square()) fail(Err::DimensionMismatch, "expm needs a square matrix");
    if (!all_finite(a)) fail(Err::NonFiniteInput, "expm: non-finite entries");
    const std::size_t n = a.rows;

    // Scale so the degree-6 diagonal Pade approximant is evaluated at
    // norm1 <= 1/2, then undo by repeated squaring.
    int s = 0;
    const double nrm = norm1(a);
    if (nrm > 0.5) s = std::max(0, static_cast<int>(std::ceil(std::log2(nrm))) + 1);
    Matrix b = std::ldexp(1.0, -s) * a;

    // Degree-6 diagonal Pade coefficients: b_k = (12-k)! 6! / (12! k! (6-k)!).
    static const double c[7] = {
        1.0, 1.0 / 2.0, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0,
    };
    const Matrix b2 = b * b;
    const Matrix b4 = b2 * b2;
    const Matrix b6 = b4 * b2;
    const Matrix ident = Matrix::identity(n);

    Matrix even = c[0] * ident + c[2] * b2 + c[4] * b4 + c[6] * b6;
    Matrix odd = b * (c[1] * ident + c[3] * b2 + c[5] * b4);
    Matrix num = even + odd;
    Matrix den = even - odd;

    Matrix x = solve(den, num);
    for (int k = 0; k < s; ++k) x = x * x;
    if (!all_finite(x)) fail(Err::Overflow, "expm: non-finite result");
    return x;
}

AffineKernel affine_flow_matrices(const Matrix& a, const Vec& b, double t) {
    if (!a.square() || a.rows != b.size()) fail(Err::DimensionMismatch, "affine_flow_matrices shape");
    const std::size_t n = a.rows;
    Matrix aug(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j) * t;
        aug(i, n) = b[i] * t;
    }
    const Matrix e = expm(aug);
    AffineKernel k;
    k.W = Matrix(n, n);
    k.c = Vec(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k.W(i, j) = e(i, j);
        k.c[i] = e(i, n);
    }
    return k;
}

Matrix log_elementary(const Matrix& u) {
    if (!u.square()) fail(Err::DimensionMismatch, "log_elementary needs a square matrix");
    const std::size_t n = u.rows;
    Matrix g(n, n);
    std::size_t off_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                if (u(i, j) != 1.0) fail(Err::NotElementary, "diagonal entry differs from 1");
            } else if (u(i, j) != 0.0) {
                g(i, j) = u(i, j);
                ++off_count;
            }
        }
    }
    if (off_count > 1) fail(Err::NotElementary, "more than one off-diagonal entry");
    return g;
}

Matrix log_signed_diag(const Matrix& sign_diag) {
    if (!sign_diag.square()) fail(Err::DimensionMismatch, "log_signed_diag needs a square matrix");
    const std::size_t n = sign_diag.rows;
    std::vector<std::size_t> negs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = sign_diag(i, j);
            if (i == j) {
                if (v != 1.0 && v != -1.0) fail(Err::NotSignDiagonal, "diagonal entry not +-1");
                if (v == -1.0) negs.push_back(i);
            } else if (v != 0.0) {
                fail(Err::NotSignDiagonal, "nonzero off-diagonal entry");
            }
        }
    }
    if (negs.size() % 2 != 0) fail(Err::OddNegativeCount, "sign diagonal has determinant -1");
    Matrix g(n, n);
    for (std::size_t k = 0; k + 1 < negs.size(); k += 2) {
        const std::size_t i = negs[k], j = negs[k + 1];
        g(i, j) = std::numbers::pi;
        g(j, i) = -std::numbers::pi;
    }
    return g;
}

} // namespace flowforge
