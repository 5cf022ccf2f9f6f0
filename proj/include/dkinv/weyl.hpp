#pragma once

#include "dkinv/dkernel.hpp"
#include "dkinv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkinv {

class PoleError : public DomainError {
public:
    explicit PoleError(cplx lambda)
        : DomainError("weyl: lambda = (" + std::to_string(lambda.real()) + ", " + std::to_string(lambda.imag()) +
                      ") is an eigenvalue of beta"),
          lambda_(lambda) {}
    [[nodiscard]] cplx lambda() const noexcept { return lambda_; }

private:
    cplx lambda_;
};

class UnsupportedCaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// phi(lambda) = (i/2) D + theta1^* (beta - lambda I)^{-1} theta2, without
/// checking the realization identity.
inline ComplexMatrix weyl_value(const Realization& r, cplx lambda) {
    const double scale = std::max(1.0, r.beta.norm());
    for (cplx z : eig_spectrum(r.beta))
        if (std::abs(z - lambda) <= 1e-12 * scale) throw PoleError(lambda);
    const ComplexMatrix shifted = r.beta - lambda * identity(r.n());
    ComplexMatrix res;
    try {
        res = solve(shifted, r.theta2);
    } catch (const SingularMatrixError&) {
        throw PoleError(lambda);
    }
    return 0.5 * I_unit * r.D.matrix() + r.theta1.adjoint() * res;
}

/// Rational Herglotz function given by a realization that satisfies the
/// matrix identity (checked on construction).
class WeylFunction {
public:
    explicit WeylFunction(Realization r) : r_(std::move(r)) { require_identity(r_); }

    [[nodiscard]] const Realization& realization() const { return r_; }
    [[nodiscard]] ComplexMatrix operator()(cplx lambda) const { return weyl_value(r_, lambda); }

private:
    Realization r_;
};

inline ComplexMatrix weyl_eval(const WeylFunction& W, cplx lambda) { return W(lambda); }

/// Absolutely continuous density, real eigenvalues and point masses of the
/// Herglotz measure.
struct HerglotzData {
    Realization realization;
    std::vector<double> eigenvalues;     // z_1 < z_2 < ...
    std::vector<ComplexMatrix> residues;  // nu_k, Hermitian >= 0

    /// zeta(t) = I - i D^{-1} (theta2 - theta1)^* (t I - beta)^{-1} theta2.
    [[nodiscard]] ComplexMatrix zeta(double t) const {
        const auto& r = realization;
        const ComplexMatrix res = solve(t * identity(r.n()) - r.beta, r.theta2);
        return identity(r.p()) - I_unit * r.D.inverse_matrix() * (r.theta2 - r.theta1).adjoint() * res;
    }

    /// rho(t) = zeta(t)^* D zeta(t) / (2 pi).
    [[nodiscard]] ComplexMatrix density(double t) const {
        const ComplexMatrix z = zeta(t);
        return z.adjoint() * realization.D.matrix() * z / (2.0 * std::numbers::pi);
    }
};

inline HerglotzData herglotz_data(const WeylFunction& W) {
    const auto& r = W.realization();
    HerglotzData out{r, {}, {}};
    const int n = r.n();
    Eigen::ComplexEigenSolver<ComplexMatrix> es(r.beta);
    if (es.info() != Eigen::Success) throw std::runtime_error("herglotz_data: eigen decomposition failed");
    const ComplexMatrix V = es.eigenvectors();
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, r.beta.norm());

    std::vector<int> real_idx;
    for (int m = 0; m < n; ++m)
        if (std::abs(ev(m).imag()) <= 1e-10 * scale) real_idx.push_back(m);
    if (real_idx.empty()) return out;

    Eigen::PartialPivLU<ComplexMatrix> lu(V);
    if (lu.rcond() < 1e-10) throw UnsupportedCaseError("herglotz_data: beta is (numerically) not diagonalizable");
    const ComplexMatrix W_rows = lu.inverse();

    std::sort(real_idx.begin(), real_idx.end(), [&](int a, int b) { return ev(a).real() < ev(b).real(); });
    std::vector<std::vector<int>> clusters;
    for (int m : real_idx) {
        if (!clusters.empty() && std::abs(ev(m).real() - ev(clusters.back().front()).real()) <= 1e-8 * scale)
            clusters.back().push_back(m);
        else
            clusters.push_back({m});
    }
    for (const auto& cl : clusters) {
        ComplexMatrix proj = ComplexMatrix::Zero(n, n);
        double z = 0.0;
        for (int m : cl) {
            proj += V.col(m) * W_rows.row(m);
            z += ev(m).real();
        }
        z /= static_cast<double>(cl.size());
        const double nilp = ((r.beta - z * identity(n)) * proj).norm();
        if (nilp > 1e-6 * scale * std::max(1.0, proj.norm()))
            throw UnsupportedCaseError("herglotz_data: defective real eigenvalue");
        out.eigenvalues.push_back(z);
        out.residues.push_back(r.theta2.adjoint() * proj * r.theta2);
    }
    return out;
}

}  // namespace dkinv
