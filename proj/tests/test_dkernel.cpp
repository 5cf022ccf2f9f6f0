#include "dkinv/dkernel.hpp"
#include "support/realizations.hpp"

#include <gtest/gtest.h>

using namespace dkinv;
using fixtures::random_valid;
using fixtures::scalar_case;

TEST(DiagonalStructure, LevelsAndMultiplicities) {
    const DiagonalStructure D({2.0, 1.0, 1.0});
    EXPECT_EQ(D.p(), 3);
    EXPECT_EQ(D.k(), 2);
    EXPECT_EQ(D.multiplicities(), (std::vector<int>{1, 2}));
    EXPECT_DOUBLE_EQ(D.level(1), 2.0);
    EXPECT_DOUBLE_EQ(D.level(2), 1.0);
    EXPECT_DOUBLE_EQ(D.level(3), 0.0);
    EXPECT_EQ(D.level_of(0), 1);
    EXPECT_EQ(D.level_of(2), 2);
}

TEST(DiagonalStructure, RejectsBadInput) {
    EXPECT_THROW(DiagonalStructure(std::vector<double>{}), DimensionError);
    EXPECT_THROW(DiagonalStructure({1.0, 2.0}), DomainError);
    EXPECT_THROW(DiagonalStructure({1.0, 0.0}), DomainError);
    EXPECT_THROW(DiagonalStructure({1.0, -1.0}), DomainError);
    EXPECT_THROW(DiagonalStructure({1.0}).level(3), DomainError);
}

TEST(Projector, Examples) {
    const DiagonalStructure D({2.0, 1.0, 1.0});
    ComplexMatrix expect = ComplexMatrix::Zero(3, 3);
    expect(0, 0) = 1.0;
    EXPECT_EQ(projector(D, 2), expect);
    EXPECT_EQ(projector(D, 3), identity(3));
    EXPECT_EQ(projector(DiagonalStructure({5.0}), 2), identity(1));
    EXPECT_THROW(projector(D, 1), DomainError);
    EXPECT_THROW(projector(D, 4), DomainError);
}

TEST(Realization, ShapeValidation) {
    const DiagonalStructure D({1.0, 1.0});
    EXPECT_THROW(Realization(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 3), D, 1.0),
                 DimensionError);
    EXPECT_THROW(Realization(ComplexMatrix::Zero(2, 1), ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2), D, 1.0),
                 DimensionError);
    EXPECT_THROW(Realization(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2), D, 0.0),
                 DomainError);
}

TEST(Realization, IdentityOnGeneratedData) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = random_valid(seed, {2.0, 1.0, 1.0}, 3);
        EXPECT_TRUE(satisfies_identity(r));
        EXPECT_LE(max_imag_spectrum(r), 1e-10);
        EXPECT_NO_THROW(require_identity(r));
        const auto bad = fixtures::perturbed(r);
        EXPECT_FALSE(satisfies_identity(bad));
        EXPECT_THROW(require_identity(bad), DomainError);
    }
}

TEST(KernelK, ZeroThetaAndScalarCase) {
    auto r = random_valid(1, {2.0, 1.0}, 2);
    r.theta1.setZero();
    for (double x : {-1.5, -0.2, 0.0, 0.7, 2.0}) EXPECT_LE(kernel_k(r, x).norm(), 1e-15);

    const auto s = scalar_case();
    for (double x : {0.0, 0.25, 0.5, 1.0}) EXPECT_LE(std::abs(kernel_k(s, x)(0, 0) - std::exp(-I_unit * x)), 1e-14);
}

TEST(KernelK, HermitianSymmetryAndDomain) {
    const auto r = random_valid(3, {3.0, 1.0, 1.0}, 4);
    for (int m = 1; m <= 20; ++m) {
        const double x = 3.0 * m / 20.0;
        EXPECT_LE((kernel_k(r, -x) - kernel_k(r, x).adjoint()).norm(), 1e-14);
    }
    EXPECT_THROW(kernel_k(r, 3.01), DomainError);
}

TEST(SFunction, Examples) {
    const auto s = scalar_case();
    for (double x : {0.0, 0.3, 1.0, 2.5}) {
        const cplx expect = 0.5 - I_unit * (1.0 - std::exp(-I_unit * x));
        EXPECT_LE(std::abs(s_function(s, x)(0, 0) - expect), 1e-14) << x;
        if (x <= 1.0) EXPECT_LE(std::abs(phi1(s, x)(0, 0) - expect), 1e-14);
    }
    auto r = random_valid(4, {2.0, 1.0}, 3);
    EXPECT_LE((s_function(r, 0.0) - 0.5 * identity(2)).norm(), 1e-15);
    EXPECT_LE((phi1(r, 0.0) - 0.5 * r.D.matrix()).norm(), 1e-15);
    r.theta1.setZero();
    EXPECT_LE((s_function(r, 1.3) - 0.5 * identity(2)).norm(), 1e-15);
    EXPECT_LE((phi1(r, 0.8) - 0.5 * r.D.matrix()).norm(), 1e-15);
    EXPECT_THROW(s_function(r, -0.1), DomainError);
    EXPECT_THROW(phi1(r, 1.5), DomainError);
}

TEST(SFunction, SingularBetaHandled) {
    auto r = random_valid(5, {1.0}, 2);
    r.beta.setZero();
    r.theta2 = r.theta1;
    // int_0^x e^{0} du = x
    const ComplexMatrix expect = 0.5 * identity(1) + 2.0 * r.theta2.adjoint() * r.theta1;
    EXPECT_LE((s_function(r, 2.0) - expect).norm(), 1e-14);
}

TEST(SFunction, DerivativeIsScaledKernel) {
    const auto r = random_valid(6, {2.0, 1.0, 1.0}, 3);
    const double x = 0.8;
    const ComplexMatrix target = r.D.inverse_matrix() * kernel_k(r, x);
    double prev = 0.0;
    for (double h : {0.08, 0.04, 0.02}) {
        const ComplexMatrix fd = (s_function(r, x + h) - s_function(r, x - h)) / (2.0 * h);
        const double err = (fd - target).norm();
        if (prev > 0.0) EXPECT_GE(prev / err, 3.0);
        prev = err;
    }
}

TEST(SFunction, TwoPointSymmetryAndJump) {
    const auto r = random_valid(7, {2.0, 1.0}, 3);
    const ComplexMatrix D = r.D.matrix(), Dinv = r.D.inverse_matrix();
    for (auto [x, t] : {std::pair{0.2, 0.7}, {0.9, 0.1}, {0.5, 0.6}, {1.0, 0.3}}) {
        const ComplexMatrix lhs = s_two_point(r, x, t);
        const ComplexMatrix rhs = -Dinv * s_two_point(r, t, x).adjoint() * D;
        EXPECT_LE((lhs - rhs).norm(), 1e-13);
    }
    const double eps = 1e-9;
    for (int i = 0; i < r.p(); ++i)
        EXPECT_NEAR(std::abs(s_signed(r, eps)(i, i) - s_signed(r, -eps)(i, i) - 1.0), 0.0, 1e-8);
}

TEST(Upsilon, Examples) {
    const DiagonalStructure D1({1.0});
    const MatrixFunction zero = [](double) { return ComplexMatrix::Zero(1, 1); };
    const MatrixFunction one = [](double) { return ComplexMatrix::Ones(1, 1); };
    EXPECT_EQ(upsilon_kernel(zero, one, D1, 1.0, 0, 0, 0.3, 0.4), cplx(0.0, 0.0));

    const cplx c{0.7, -0.2};
    const MatrixFunction cq = [c](double) { return ComplexMatrix::Constant(1, 1, c); };
    const double l = 1.0;
    for (auto [x, t] : {std::pair{0.2, 0.5}, {0.8, 0.1}, {0.5, 0.5}}) {
        const double span = std::min(2.0 * l - x + t, x + 2.0 * l - t) - x - t;
        const cplx expect = c * span / 2.0;
        EXPECT_LE(std::abs(upsilon_kernel(cq, one, D1, l, 0, 0, x, t) - expect), 1e-12);
    }

    const DiagonalStructure D2({2.0, 1.0});
    const MatrixFunction q = [](double u) { return ComplexMatrix::Constant(2, 2, cplx(1.0 + u, u)); };
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(upsilon_kernel(q, q, D2, l, i, j, l, l), cplx(0.0, 0.0));
    EXPECT_THROW(upsilon_kernel(q, q, D2, l, 0, 2, 0.1, 0.1), DomainError);
}
