#include "dkinv/oracle.hpp"
#include "support/realizations.hpp"

#include <gtest/gtest.h>

using namespace dkinv;
using fixtures::random_valid;
using fixtures::scalar_case;

TEST(Grid, WeightsSumToLength) {
    const Grid g{37, 1.3};
    double sum = 0.0;
    for (int a = 0; a < g.N; ++a) sum += g.weight();
    EXPECT_NEAR(sum, 1.3, 1e-14);
    EXPECT_GT(g.node(0), 0.0);
    EXPECT_LT(g.node(36), 1.3);
}

TEST(DiscretizeS, ZeroDataIsIdentity) {
    const auto S = discretize_S(fixtures::zero_data({2.0, 1.0}, 2), 16);
    EXPECT_EQ(S.size(), 32);
    EXPECT_LE((S.matrix - identity(32)).norm(), 1e-15);
    EXPECT_THROW(discretize_S(fixtures::zero_data({1.0}, 1), 4), DomainError);
}

TEST(DiscretizeS, ScalarRankOneSpectrum) {
    const auto S = discretize_S(scalar_case(), 200);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (S.matrix + S.matrix.adjoint()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    EXPECT_NEAR(ev(ev.size() - 1), 2.0, 1e-4);
    EXPECT_NEAR(ev(0), 1.0, 1e-10);
    EXPECT_NEAR(ev(ev.size() - 2), 1.0, 1e-10);
    const auto b = positivity_spectrum(S);
    EXPECT_NEAR(b.min, 1.0, 0.02);
    EXPECT_NEAR(b.max, 2.0, 0.04);
}

TEST(DiscretizeS, HermitianForValidAndMultiLevelData) {
    for (const auto& d : fixtures::d_catalog()) {
        const auto r = random_valid(21, d, 3);
        const auto S = discretize_S(r, 64);
        EXPECT_LE((S.matrix - S.matrix.adjoint()).norm(), 1e-10);
        EXPECT_TRUE(all_finite(S.matrix));
    }
}

TEST(Positivity, IdentityAndValidRealizations) {
    const DiscreteOperator I{Grid{10, 1.0}, 1, identity(10)};
    const auto b = positivity_spectrum(I);
    EXPECT_NEAR(b.min, 1.0, 1e-15);
    EXPECT_NEAR(b.max, 1.0, 1e-15);
    for (std::uint64_t seed = 30; seed < 34; ++seed) {
        const auto r = random_valid(seed, {2.0, 1.0, 1.0}, 3);
        EXPECT_GT(positivity_spectrum(discretize_S(r, 100)).min, 0.0);
    }
    DiscreteOperator skew{Grid{2, 1.0}, 1, identity(2)};
    skew.matrix(0, 1) = 1.0;
    EXPECT_THROW(positivity_spectrum(skew), DomainError);
}

TEST(DiscretizeT, ZeroAndScalar) {
    const auto Z = discretize_T(require_inverse_kernel(fixtures::zero_data({1.0}, 2)), 12);
    EXPECT_LE((Z.matrix - identity(12)).norm(), 1e-15);

    const int N = 50;
    const auto T = discretize_T(require_inverse_kernel(scalar_case()), N);
    const Grid g{N, 1.0};
    for (int a = 0; a < N; a += 7)
        for (int b = 0; b < N; b += 5) {
            const cplx expect = (a == b ? 1.0 : 0.0) - 0.5 * std::exp(I_unit * (g.node(b) - g.node(a))) * g.weight();
            EXPECT_LE(std::abs(T.matrix(a, b) - expect), 1e-12);
        }
}

TEST(DiscretizeT, CompositionRefines) {
    const auto r = random_valid(40, {2.0, 1.0}, 3);
    const auto K = require_inverse_kernel(r);
    double prev = 0.0;
    for (int N : {50, 100, 200}) {
        const auto S = discretize_S(r, N);
        const auto T = discretize_T(K, N);
        const double res = (T.matrix * S.matrix - identity(S.size())).norm();
        if (prev > 0.0) EXPECT_GE(prev / res, 1.5) << N;
        prev = res;
    }
}

TEST(OperatorIdentity, ScalarFirstOrder) {
    const double r200 = operator_identity_residual(scalar_case(), 200);
    const double r400 = operator_identity_residual(scalar_case(), 400);
    EXPECT_LE(r400, 5e-3);
    EXPECT_GE(r200 / r400, 1.5);
}

TEST(OperatorIdentity, ZeroDataAndRandomRefinement) {
    EXPECT_LE(operator_identity_residual(fixtures::zero_data({2.0, 1.0}, 1), 100), 5.0 / 100);
    const auto r = random_valid(41, {2.0, 1.0, 1.0}, 2);
    const double a = operator_identity_residual(r, 50), b = operator_identity_residual(r, 100);
    EXPECT_GE(a / b, 1.5);
}

TEST(Rk4, ZeroAndScalar) {
    const Rk4Fundamental Z(fixtures::zero_data({2.0, 1.0}, 2), 100);
    for (double y : {0.0, 0.7, 2.0}) EXPECT_LE((Z(y) - identity(4)).norm(), 1e-14);
    const Rk4Fundamental S(scalar_case(), 2000);
    for (double y : {0.2, 0.6, 1.0}) {
        ComplexMatrix expect(2, 2);
        expect << 1.0 - y, -y, y, 1.0 + y;
        EXPECT_LE((S(y) - expect).norm(), 1e-8);
    }
    EXPECT_THROW(Rk4Fundamental(scalar_case(), 50), DomainError);
    EXPECT_THROW(S(1.5), DomainError);
}

TEST(FourierWeyl, Examples) {
    auto r = random_valid(50, {2.0, 1.0}, 2);
    r.theta1.setZero();
    EXPECT_LE(fourier_weyl_check(r, cplx(0.3, 1.0), 30.0), 1e-8);
    EXPECT_LE(fourier_weyl_check(scalar_case(), cplx(0.0, 1.0), 30.0), 1e-6);
    const auto v = random_valid(51, {2.0, 1.0, 1.0}, 3);
    for (cplx lam : {cplx(0.0, 1.0), cplx(1.0, 0.5), cplx(-2.0, 1.5), cplx(0.5, 3.0), cplx(3.0, 0.7)})
        EXPECT_LE(fourier_weyl_check(v, lam, 25.0 / lam.imag()), 1e-5) << lam;
    EXPECT_THROW(fourier_weyl_check(v, cplx(0.0, 0.05), 1000.0), DomainError);
    EXPECT_THROW(fourier_weyl_check(v, cplx(0.0, 1.0), 5.0), DomainError);
}
