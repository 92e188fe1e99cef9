#pragma once

#include "flowforge/program.hpp"

namespace flowforge {

// One shear row operation U = I + lambda * E_ij (adds lambda times row j to
// row i when applied from the left).
struct ShearFactor {
    std::size_t i = 0;
    std::size_t j = 0;
    double lambda = 0.0;

    Matrix matrix(std::size_t d) const;
};

// Witness of the shear-only diagonalization U_n ... U_1 W = Lambda * SignDiag.
struct EliminationCertificate {
    std::size_t dim = 0;
    std::vector<ShearFactor> factors; // in application order U_1, U_2, ...
    Vec diag;                         // positive diagonal Lambda
    std::vector<int> signs;           // +-1 entries, even count of -1
    double det_w = 0.0;

    Matrix lambda_matrix() const;
    Matrix sign_matrix() const;
    // U_n ... U_1 W recomputed from the factors, for certificate checks.
    Matrix reduce(const Matrix& w) const;
};

// Diagonalizes W using shear row operations only (no swaps). Pivots smaller
// than 1e-8 in magnitude are repaired by adding a lower row first. Rejects
// |det| <= 1e-10 (SingularMatrix) and det < 0 (NegativeDeterminant).
EliminationCertificate eliminate(const Matrix& w);

// Compiles x -> W x + b, det(W) > 0, into an F0 program: sign-diagonal
// rotations, the diagonal log, the inverted shears in reverse order, then the
// translation, each as a duration-1 affine step.
FlowProgram compile_affine(const Matrix& w, const Vec& b);

} // namespace flowforge
