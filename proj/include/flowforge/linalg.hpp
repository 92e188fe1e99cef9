#pragma once

#include <cstddef>
#include <vector>

#include "flowforge/error.hpp"

namespace flowforge {

using Vec = std::vector<double>;

// Dense row-major matrix. Dimensions here are tiny (d <= 10 or so), so the
// implementation favors clarity over blocking/vectorization.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool square() const { return rows == cols; }

    static Matrix identity(std::size_t n);
    static Matrix diag(const Vec& d);
};

Matrix operator*(const Matrix& x, const Matrix& y);
Matrix operator+(const Matrix& x, const Matrix& y);
Matrix operator-(const Matrix& x, const Matrix& y);
Matrix operator*(double s, const Matrix& x);
bool operator==(const Matrix& x, const Matrix& y);

Vec matvec(const Matrix& m, const Vec& x);

double dot(const Vec& x, const Vec& y);
double norm_inf(const Vec& x);
double norm2(const Vec& x);
bool all_finite(const Vec& x);
bool all_finite(const Matrix& m);

// Max absolute column sum; drives the scaling count in expm.
double norm1(const Matrix& m);
double max_abs(const Matrix& m);

// Determinant via LU with partial pivoting.
double det(Matrix m);

// Solves a * x = rhs (square a) by Gaussian elimination with partial
// pivoting; throws SingularMatrix on a vanishing pivot.
Matrix solve(Matrix a, Matrix rhs);

// Inverse convenience wrapper over solve().
Matrix inverse(const Matrix& m);

// Matrix exponential: scaling-and-squaring with the degree-6 diagonal Pade
// approximant; squaring count chosen from norm1(A). Throws Overflow when the
// result is not finite.
Matrix expm(const Matrix& a);

// Time-t flow of xdot = A x + b written as x -> W x + c, computed through the
// exponential of the (d+1)x(d+1) augmented block matrix [[A, b], [0, 0]].
struct AffineKernel {
    Matrix W;
    Vec c;
};
AffineKernel affine_flow_matrices(const Matrix& a, const Vec& b, double t);

// Logarithm of an elementary shear U = I + lambda*E_ij (i != j): returns
// lambda*E_ij. The exponential series of the result truncates, so
// expm(log_elementary(U)) == U exactly.
Matrix log_elementary(const Matrix& u);

// Real logarithm of a sign diagonal with even negative count: -1 entries are
// paired in ascending index order and each pair (i, j) gets the rotation
// generator +pi at (i, j), -pi at (j, i).
Matrix log_signed_diag(const Matrix& sign_diag);

} // namespace flowforge
