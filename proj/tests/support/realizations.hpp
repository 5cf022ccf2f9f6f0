#pragma once

#include "dkinv/dkernel.hpp"
#include "dkinv/inversion.hpp"
#include "dkinv/linalg.hpp"
#include "dkinv/oracle.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace dkinv::fixtures {

inline ComplexMatrix scalar(cplx v) {
    ComplexMatrix m(1, 1);
    m(0, 0) = v;
    return m;
}

/// p = n = 1, theta1 = theta2 = 1, beta = -1, D = 1, l = 1.
inline Realization scalar_case(double l = 1.0) {
    return Realization(scalar(1.0), scalar(1.0), scalar(-1.0), DiagonalStructure({1.0}), l);
}

inline Realization zero_data(std::vector<double> d, int n, double l = 1.0) {
    const int p = static_cast<int>(d.size());
    return Realization(ComplexMatrix::Zero(n, p), ComplexMatrix::Zero(n, p), ComplexMatrix::Zero(n, n),
                       DiagonalStructure(std::move(d)), l);
}

inline const std::vector<std::vector<double>>& d_catalog() {
    static const std::vector<std::vector<double>> cat{{1.0}, {2.0, 1.0}, {2.0, 1.0, 1.0}, {2.0, 2.0, 1.0},
                                                      {2.0, 1.0, 0.5}, {1.0, 1.0}};
    return cat;
}

inline ComplexMatrix random_complex(std::mt19937_64& rng, int rows, int cols, double scale) {
    std::normal_distribution<double> nd(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) {
            const double re = nd(rng), im = nd(rng);
            m(r, c) = scale * cplx(re, im);
        }
    return m;
}

/// Random realization satisfying the identity: beta = H0 - (i/2) Delta D^{-1} Delta^*
/// with Delta = theta2 - theta1 and H0 Hermitian.
inline Realization random_valid(std::uint64_t seed, std::vector<double> d, int n, double l = 1.0,
                                double scale = 0.4) {
    std::mt19937_64 rng(seed);
    const int p = static_cast<int>(d.size());
    const DiagonalStructure D(std::move(d));
    const ComplexMatrix t1 = random_complex(rng, n, p, scale);
    const ComplexMatrix t2 = random_complex(rng, n, p, scale);
    const ComplexMatrix g = random_complex(rng, n, n, 2.0 * scale);
    const ComplexMatrix H0 = 0.5 * (g + g.adjoint());
    const ComplexMatrix diff = t2 - t1;
    const ComplexMatrix beta = H0 - 0.5 * I_unit * diff * D.inverse_matrix() * diff.adjoint();
    return Realization(t1, t2, beta, D, l);
}

/// Ten valid realizations with p <= 3, n <= 4, several with k >= 2.
inline std::vector<Realization> acceptance_set(double l = 1.0) {
    const auto& cat = d_catalog();
    const int ns[] = {1, 2, 3, 4, 2, 3, 4, 3, 2, 4};
    const int ds[] = {0, 1, 2, 3, 4, 1, 2, 4, 5, 3};
    std::vector<Realization> out;
    for (int m = 0; m < 10; ++m)
        out.push_back(random_valid(1000 + static_cast<std::uint64_t>(m), cat[static_cast<std::size_t>(ds[m])], ns[m], l));
    return out;
}

/// Realization whose identity residual is made nonzero by shifting beta.
inline Realization perturbed(const Realization& r, double eps = 1e-3) {
    Realization out = r;
    out.beta(0, 0) += cplx(0.0, eps);
    return out;
}

/// Base data for the singular case: p = 2, D = diag(2, 1), theta real,
/// beta real symmetric, theta2 = c theta1. The operator is I + c K with K
/// Hermitian and a continuous kernel.
inline Realization scaled_family(double c, double l = 1.0) {
    ComplexMatrix t(3, 2);
    t << 0.9, -0.4, 0.3, 0.8, -0.5, 0.6;
    ComplexMatrix beta(3, 3);
    beta << 1.5, 0.4, -0.2, 0.4, -0.7, 0.3, -0.2, 0.3, 2.1;
    return Realization(t, c * t, beta, DiagonalStructure({2.0, 1.0}), l);
}

inline cplx det_u22(double c) {
    const FundamentalSolution F(scaled_family(c));
    const int n = F.n();
    return F.U(F.a()).bottomRightCorner(n, n).determinant();
}

/// Scaling c at which U_22(a) is singular: start from -1/mu with mu the most
/// negative Nystrom eigenvalue of K, then secant steps on det U_22(a).
inline double singular_scaling() {
    const auto S = discretize_S(scaled_family(1.0), 200);
    const ComplexMatrix K = S.matrix - identity(S.size());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (K + K.adjoint()), Eigen::EigenvaluesOnly);
    const double mu = std::abs(es.eigenvalues().minCoeff()) > std::abs(es.eigenvalues().maxCoeff())
                          ? es.eigenvalues().minCoeff()
                          : es.eigenvalues().maxCoeff();
    double c0 = -1.0 / mu, c1 = c0 * (1.0 + 1e-4);
    cplx f0 = det_u22(c0), f1 = det_u22(c1);
    for (int it = 0; it < 60 && std::abs(f1) > 1e-15; ++it) {
        const cplx step = f1 * (c1 - c0) / (f1 - f0);
        c0 = c1;
        f0 = f1;
        c1 = c1 - step.real();
        f1 = det_u22(c1);
        if (std::abs(step.real()) < 1e-16 * std::abs(c1)) break;
    }
    return c1;
}

}  // namespace dkinv::fixtures

namespace dkinv::fixtures {

/// ||S_N h|| / ||h|| for a vector function h sampled on the midpoint grid.
template <class H>
double nystrom_residual(const Realization& r, const H& h, int N) {
    const auto S = discretize_S(r, N);
    ComplexVector v(r.p() * N);
    for (int a = 0; a < N; ++a) {
        const ComplexVector ha = h(S.grid.node(a));
        for (int i = 0; i < r.p(); ++i) v(i * N + a) = ha(i);
    }
    return (S.matrix * v).norm() / v.norm();
}

}  // namespace dkinv::fixtures
