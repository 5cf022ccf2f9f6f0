#include "dkinv/linalg.hpp"
#include "dkinv/quadrature.hpp"
#include "support/realizations.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

using namespace dkinv;

TEST(MatExp, ZeroGivesIdentity) {
    EXPECT_LE((mat_exp(ComplexMatrix::Zero(2, 2)) - identity(2)).norm(), 1e-15);
}

TEST(MatExp, DiagonalPhase) {
    ComplexMatrix M = ComplexMatrix::Zero(2, 2);
    M(0, 0) = I_unit * std::numbers::pi;
    ComplexMatrix expect = ComplexMatrix::Zero(2, 2);
    expect(0, 0) = -1.0;
    expect(1, 1) = 1.0;
    EXPECT_LE((mat_exp(M) - expect).norm(), 1e-14);
}

TEST(MatExp, NilpotentIsLinear) {
    ComplexMatrix M(2, 2);
    M << -1.0, -1.0, 1.0, 1.0;
    for (double y : {0.1, 0.5, 1.0, 3.0, 10.0})
        EXPECT_LE((mat_exp(y * M) - (identity(2) + y * M)).norm(), 1e-12 * (1.0 + y)) << y;
}

TEST(MatExp, InverseProductAcrossPadeDegrees) {
    std::mt19937_64 rng(7);
    for (double target : {1e-3, 0.1, 0.5, 1.5, 4.0, 10.0, 20.0}) {
        const ComplexMatrix g = fixtures::random_complex(rng, 5, 5, 1.0);
        const ComplexMatrix h = 0.5 * (g + g.adjoint());
        ComplexMatrix M = I_unit * h + 0.1 * fixtures::random_complex(rng, 5, 5, 1.0);
        M *= target / M.norm();
        const ComplexMatrix P = mat_exp(M) * mat_exp(-M);
        EXPECT_LE((P - identity(5)).norm(), 1e-10) << target;
    }
}

TEST(MatExp, AgreesWithEigenDecompositionOfHermitian) {
    std::mt19937_64 rng(11);
    const ComplexMatrix g = fixtures::random_complex(rng, 4, 4, 1.0);
    const ComplexMatrix H = 0.5 * (g + g.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H);
    const Eigen::VectorXcd phases = (I_unit * es.eigenvalues().cast<cplx>()).array().exp();
    const ComplexMatrix ref = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    EXPECT_LE((mat_exp(I_unit * H) - ref).norm(), 1e-12);
}

TEST(MatExp, RejectsNonSquareAndNonFinite) {
    EXPECT_THROW(mat_exp(ComplexMatrix::Zero(2, 3)), DimensionError);
    ComplexMatrix M = ComplexMatrix::Zero(2, 2);
    M(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(mat_exp(M), DomainError);
}

TEST(EigSpectrum, DiagonalAndNilpotent) {
    ComplexMatrix M = ComplexMatrix::Zero(2, 2);
    M(0, 0) = 1.0;
    M(1, 1) = 2.0;
    auto ev = eig_spectrum(M);
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    EXPECT_NEAR(std::abs(ev[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(ev[1] - 2.0), 0.0, 1e-14);

    ComplexMatrix N = ComplexMatrix::Zero(2, 2);
    N(0, 1) = 1.0;
    for (cplx z : eig_spectrum(N)) EXPECT_LE(std::abs(z), 1e-14);
}

TEST(EigSpectrum, HermitianTwoByTwoMatchesCharacteristicRoots) {
    std::mt19937_64 rng(3);
    const ComplexMatrix g = fixtures::random_complex(rng, 2, 2, 1.0);
    const ComplexMatrix H = 0.5 * (g + g.adjoint());
    const double tr = H.trace().real();
    const double det = H.determinant().real();
    const double disc = std::sqrt(tr * tr - 4.0 * det);
    std::vector<double> roots{(tr - disc) / 2.0, (tr + disc) / 2.0};
    auto ev = eig_spectrum(H);
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    for (int k = 0; k < 2; ++k) {
        EXPECT_LE(std::abs(ev[static_cast<std::size_t>(k)].imag()), 1e-10);
        EXPECT_NEAR(ev[static_cast<std::size_t>(k)].real(), roots[static_cast<std::size_t>(k)], 1e-10);
    }
}

TEST(Solve, TrivialCases) {
    const ComplexMatrix R = ComplexMatrix::Random(3, 2);
    EXPECT_LE((solve(identity(3), R) - R).norm(), 1e-15);
    ComplexMatrix two(1, 1), four(1, 1);
    two(0, 0) = 2.0;
    four(0, 0) = 4.0;
    EXPECT_NEAR(std::abs(solve(two, four)(0, 0) - 2.0), 0.0, 1e-15);
}

TEST(Solve, ResidualOnWellConditionedSystem) {
    std::mt19937_64 rng(5);
    const ComplexMatrix M = fixtures::random_complex(rng, 6, 6, 1.0) + 6.0 * identity(6);
    const ComplexMatrix R = fixtures::random_complex(rng, 6, 3, 1.0);
    const ComplexMatrix X = solve(M, R);
    EXPECT_LE((M * X - R).norm(), 1e-12 * R.norm());
}

TEST(Solve, SingularAndShapeErrors) {
    ComplexMatrix S(2, 2);
    S << 1.0, 2.0, 2.0, 4.0;
    try {
        (void)solve(S, identity(2));
        FAIL() << "expected SingularMatrixError";
    } catch (const SingularMatrixError& e) {
        EXPECT_LT(e.rcond(), kSingularRcond);
    }
    EXPECT_THROW((void)solve(ComplexMatrix::Zero(2, 3), identity(2)), DimensionError);
    EXPECT_THROW((void)solve(identity(2), identity(3)), DimensionError);
}

TEST(NullSpace, RankOneMatrix) {
    ComplexMatrix S(2, 2);
    S << 1.0, 2.0, 2.0, 4.0;
    const ComplexMatrix K = null_space(S, 1e-10);
    ASSERT_EQ(K.cols(), 1);
    EXPECT_LE((S * K).norm(), 1e-14);
    EXPECT_NEAR(K.norm(), 1.0, 1e-14);
}

TEST(Hermitian, InverseSqrtAndMinEigen) {
    ComplexMatrix H = ComplexMatrix::Zero(2, 2);
    H(0, 0) = 4.0;
    H(1, 1) = 9.0;
    const ComplexMatrix R = hermitian_inv_sqrt(H);
    EXPECT_NEAR(R(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(R(1, 1).real(), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(min_hermitian_eigenvalue(H), 4.0, 1e-14);
    EXPECT_THROW(hermitian_inv_sqrt(-H), DomainError);
}

TEST(Quadrature, PolynomialAndBreakpoints) {
    auto f = [](double x) {
        ComplexMatrix m(1, 1);
        m(0, 0) = x < 0.3 ? cplx(x * x, 0.0) : cplx(1.0, x);
        return m;
    };
    const double cuts[] = {0.3};
    const auto res = integrate(f, 0.0, 1.0, cuts);
    const cplx expect{0.3 * 0.3 * 0.3 / 3.0 + 0.7, (1.0 - 0.09) / 2.0};
    EXPECT_LE(std::abs(res.value(0, 0) - expect), 1e-13);
}

TEST(Quadrature, OscillatoryIntegrand) {
    auto f = [](double x) {
        ComplexMatrix m(1, 1);
        m(0, 0) = std::exp(I_unit * 40.0 * x);
        return m;
    };
    const auto res = integrate(f, 0.0, 2.0);
    const cplx expect = (std::exp(I_unit * 80.0) - 1.0) / (I_unit * 40.0);
    EXPECT_LE(std::abs(res.value(0, 0) - expect), 1e-11);
}
