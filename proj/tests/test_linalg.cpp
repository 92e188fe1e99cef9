#include "doctest.h"

#include <cmath>

#include "flowforge/linalg.hpp"

using namespace flowforge;

namespace {

double mat_gap(const Matrix& a, const Matrix& b) {
    double g = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c) g = std::max(g, std::fabs(a(r, c) - b(r, c)));
    return g;
}

Matrix mk(std::size_t r, std::size_t c, std::initializer_list<double> vals) {
    Matrix m(r, c);
    std::size_t idx = 0;
    for (double v : vals) m.a[idx++] = v;
    return m;
}

} // namespace

TEST_CASE("matrix basics") {
    Matrix id = Matrix::identity(3);
    CHECK(id(0, 0) == 1.0);
    CHECK(id(0, 1) == 0.0);

    Matrix d = Matrix::diag(Vec{2.0, -3.0});
    CHECK(d(0, 0) == 2.0);
    CHECK(d(1, 1) == -3.0);
    CHECK(d(0, 1) == 0.0);

    Matrix a = mk(2, 2, {1.0, 2.0, 3.0, 4.0});
    Matrix b = mk(2, 2, {0.0, 1.0, 1.0, 0.0});
    Matrix ab = a * b;
    CHECK(ab(0, 0) == 2.0);
    CHECK(ab(0, 1) == 1.0);
    CHECK(ab(1, 0) == 4.0);
    CHECK(ab(1, 1) == 3.0);

    Vec y = matvec(a, Vec{1.0, -1.0});
    CHECK(y[0] == -1.0);
    CHECK(y[1] == -1.0);

    CHECK(norm1(a) == 6.0); // max column sum
    CHECK(max_abs(a) == 4.0);
    CHECK(norm_inf(Vec{1.0, -5.0, 2.0}) == 5.0);
    CHECK(dot(Vec{1.0, 2.0}, Vec{3.0, 4.0}) == 11.0);
    CHECK(norm2(Vec{3.0, 4.0}) == doctest::Approx(5.0).epsilon(1e-15));

    CHECK(all_finite(Vec{1.0, 2.0}));
    CHECK_FALSE(all_finite(Vec{1.0, std::nan("")}));
}

TEST_CASE("determinant and solve") {
    CHECK(det(mk(2, 2, {2.0, 1.0, 1.0, 3.0})) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(det(mk(3, 3, {2, 0, 1, 1, 3, -1, 0, 2, 4})) == doctest::Approx(30.0).epsilon(1e-14));
    CHECK(det(mk(2, 2, {1.0, 2.0, 2.0, 4.0})) == doctest::Approx(0.0).epsilon(1e-14));
    // Zero leading pivot forces a row swap inside the LU, flipping the sign.
    CHECK(det(mk(2, 2, {0.0, 1.0, 1.0, 0.0})) == doctest::Approx(-1.0).epsilon(1e-14));

    Matrix a = mk(3, 3, {2, 0, 1, 1, 3, -1, 0, 2, 4});
    Matrix rhs(3, 1);
    rhs(0, 0) = 1.0;
    rhs(1, 0) = 2.0;
    rhs(2, 0) = 3.0;
    Matrix x = solve(a, rhs);
    Vec r = matvec(a, Vec{x(0, 0), x(1, 0), x(2, 0)});
    CHECK(std::fabs(r[0] - 1.0) <= 1e-12);
    CHECK(std::fabs(r[1] - 2.0) <= 1e-12);
    CHECK(std::fabs(r[2] - 3.0) <= 1e-12);

    Matrix inv = inverse(a);
    CHECK(mat_gap(a * inv, Matrix::identity(3)) <= 1e-13);

    CHECK_THROWS_AS(inverse(mk(2, 2, {1.0, 2.0, 2.0, 4.0})), FlowError);
}

TEST_CASE("expm closed forms") {
    // exp(0) = I
    CHECK(mat_gap(expm(Matrix(3, 3)), Matrix::identity(3)) == 0.0);

    // diagonal
    Matrix e = expm(Matrix::diag(Vec{1.0, 2.0}));
    CHECK(std::fabs(e(0, 0) - std::exp(1.0)) <= 1e-15 * std::exp(1.0));
    CHECK(std::fabs(e(1, 1) - std::exp(2.0)) <= 1e-15 * std::exp(2.0));
    CHECK(e(0, 1) == 0.0);

    // rotation
    const double th = 0.7;
    Matrix rot = expm(mk(2, 2, {0.0, -th, th, 0.0}));
    CHECK(std::fabs(rot(0, 0) - std::cos(th)) <= 1e-15);
    CHECK(std::fabs(rot(1, 0) - std::sin(th)) <= 1e-15);

    // large-angle rotation exercises the squaring phase
    Matrix big = expm(mk(2, 2, {0.0, -50.0, 50.0, 0.0}));
    CHECK(std::fabs(big(0, 0) - std::cos(50.0)) <= 1e-12);
    CHECK(std::fabs(big(1, 0) - std::sin(50.0)) <= 1e-12);

    // nilpotent shear is exact
    Matrix shear(3, 3);
    shear(0, 2) = 0.375;
    Matrix es = expm(shear);
    CHECK(es(0, 2) == 0.375);
    CHECK(mat_gap(es, Matrix::identity(3) + shear) == 0.0);

    CHECK_THROWS_AS(expm(Matrix::diag(Vec{1000.0, 0.0})), FlowError);
}

TEST_CASE("expm general matrix") {
    // Frozen reference for a dense 3x3 exponential.
    Matrix a = mk(3, 3, {0.2, -1.1, 0.4, 0.8, 0.1, -0.3, -0.5, 0.6, 0.9});
    Matrix want = mk(3, 3, {0.62013793406164663, -0.84687969330683022, 0.81407315475251729,
                            0.83870379182218302, 0.54190074057101345, -0.20038799274655866,
                            -0.40491540254330322, 1.2176773733562418, 2.1288587448056386});
    CHECK(mat_gap(expm(a), want) <= 1e-13);
}

TEST_CASE("affine flow matrices") {
    // A = 0: pure translation at unit rate.
    AffineKernel k0 = affine_flow_matrices(Matrix(2, 2), Vec{1.0, -2.0}, 0.5);
    CHECK(mat_gap(k0.W, Matrix::identity(2)) == 0.0);
    CHECK(k0.c[0] == 0.5);
    CHECK(k0.c[1] == -1.0);

    // diagonal A: c = (e^{at} - 1)/a * b
    const double av = 0.8, t = 1.25, bv = 0.6;
    AffineKernel kd = affine_flow_matrices(Matrix::diag(Vec{av}), Vec{bv}, t);
    CHECK(std::fabs(kd.W(0, 0) - std::exp(av * t)) <= 1e-14);
    CHECK(std::fabs(kd.c[0] - (std::exp(av * t) - 1.0) / av * bv) <= 1e-14);

    // frozen dense reference
    Matrix a = mk(3, 3, {0.2, -1.1, 0.4, 0.8, 0.1, -0.3, -0.5, 0.6, 0.9});
    AffineKernel k = affine_flow_matrices(a, Vec{0.3, -0.2, 0.5}, 0.75);
    Matrix want_w = mk(3, 3, {0.82619405076507302, -0.72678272950522682, 0.5311955562590609,
                              0.6460627239912321, 0.75946466683609692, -0.18208691750315062,
                              -0.3408874133583919, 0.79498321096021329, 1.8001342982136852});
    Vec want_c{0.36138634993279428, -0.10575834081033593, 0.42550273595542343};
    CHECK(mat_gap(k.W, want_w) <= 1e-13);
    for (std::size_t r = 0; r < 3; ++r) CHECK(std::fabs(k.c[r] - want_c[r]) <= 1e-13);
}

TEST_CASE("elementary and sign-diagonal logs") {
    Matrix u = Matrix::identity(3);
    u(2, 0) = 0.3;
    Matrix lu = log_elementary(u);
    CHECK(lu(2, 0) == 0.3);
    lu(2, 0) = 0.0;
    CHECK(mat_gap(lu, Matrix(3, 3)) == 0.0);
    CHECK(mat_gap(log_elementary(Matrix::identity(2)), Matrix(2, 2)) == 0.0);

    Matrix bad = Matrix::identity(2);
    bad(0, 1) = 0.5;
    bad(1, 0) = 0.5;
    CHECK_THROWS_AS(log_elementary(bad), FlowError);

    // diag(1,-1,-1): one rotation block, and expm round-trips it.
    Matrix g = log_signed_diag(Matrix::diag(Vec{1.0, -1.0, -1.0}));
    const double pi = 3.14159265358979323846;
    CHECK(g(1, 2) == pi);
    CHECK(g(2, 1) == -pi);
    CHECK(g(0, 0) == 0.0);
    CHECK(mat_gap(expm(g), Matrix::diag(Vec{1.0, -1.0, -1.0})) <= 1e-15);

    // two pairs in ascending index order
    Matrix g4 = log_signed_diag(Matrix::diag(Vec{-1.0, -1.0, -1.0, -1.0}));
    CHECK(g4(0, 1) == pi);
    CHECK(g4(2, 3) == pi);
    CHECK(mat_gap(expm(g4), Matrix::diag(Vec{-1.0, -1.0, -1.0, -1.0})) <= 1e-15);

    CHECK_THROWS_AS(log_signed_diag(Matrix::diag(Vec{1.0, -1.0})), FlowError);
    CHECK_THROWS_AS(log_signed_diag(Matrix::diag(Vec{1.0, 2.0})), FlowError);
    try {
        log_signed_diag(Matrix::diag(Vec{-1.0, 1.0, 1.0}));
        CHECK(false);
    } catch (const FlowError& e) {
        CHECK(e.code() == Err::OddNegativeCount);
    }
}
