#pragma once

// Recovery of the canonical-system Hamiltonian H(x) = gamma(x)^* gamma(x)
// from a rational Weyl function, plus the matrizant and the checks built on it.

#include "dkinv/dkernel.hpp"
#include "dkinv/inversion.hpp"
#include "dkinv/linalg.hpp"
#include "dkinv/oracle.hpp"
#include "dkinv/parallel.hpp"
#include "dkinv/quadrature.hpp"
#include "dkinv/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace dkinv {

/// The adjoint triangular factor V_+^* = I + int_0^x T_x(x, r) . dr at one
/// point x, with T_x the inverse kernel of S restricted to [0, x].
class VPlusAdjoint {
public:
    VPlusAdjoint(const Realization& r, double x) : x_(x), p_(r.p()), d_(r.D.values()) {
        if (x < 0.0 || x > r.l * (1.0 + 1e-14)) throw DomainError("VPlusAdjoint: x outside [0, l]");
        if (x == 0.0) return;
        kernel_.emplace(require_inverse_kernel(r.with_length(x)));
        const ComplexMatrix& P = kernel_->p_cross();
        const ComplexMatrix upper = identity(P.rows()) - P;
        for (int i = 0; i < p_; ++i) {
            const ComplexMatrix row = kernel_->row_factor(i, x);
            above_.push_back(row * upper);
            below_.push_back(-(row * P));
        }
        for (int i = 0; i < p_; ++i)
            for (int j = 0; j < p_; ++j) {
                const double cut = d_[static_cast<std::size_t>(i)] * x / d_[static_cast<std::size_t>(j)];
                if (cut > 0.0 && cut < x) cuts_.push_back(cut);
            }
    }

    [[nodiscard]] double x() const { return x_; }
    [[nodiscard]] const std::optional<InverseKernel>& kernel() const { return kernel_; }

    /// T_x(x, r) as a p x p matrix, r in (0, x) off the lines d_i x = d_j r.
    [[nodiscard]] ComplexMatrix kernel_row(double r) const {
        ComplexMatrix out(p_, p_);
        for (int j = 0; j < p_; ++j) {
            const ComplexMatrix col = kernel_->col_factor(j, r);
            const double rhs = d_[static_cast<std::size_t>(j)] * r;
            for (int i = 0; i < p_; ++i) {
                const bool above = d_[static_cast<std::size_t>(i)] * x_ > rhs;
                out(i, j) = ((above ? above_ : below_)[static_cast<std::size_t>(i)] * col)(0, 0);
            }
        }
        return out;
    }

    /// (V_+^* f)(x) for a p x q matrix function f on [0, x].
    [[nodiscard]] ComplexMatrix apply(const MatrixFunction& f, double abs_tol = 1e-13) const {
        const ComplexMatrix fx = f(x_);
        if (x_ == 0.0) return fx;
        QuadratureOptions opt;
        opt.abs_tol = abs_tol;
        opt.rel_tol = 1e-13;
        const auto res = integrate([&](double r) -> ComplexMatrix { return kernel_row(r) * f(r); }, 0.0, x_, cuts_, opt);
        return fx + res.value;
    }

    /// (V_+^* M)(x) for a constant p x q matrix M.
    [[nodiscard]] ComplexMatrix apply_const(const ComplexMatrix& M, double abs_tol = 1e-13) const {
        if (x_ == 0.0) return M;
        QuadratureOptions opt;
        opt.abs_tol = abs_tol;
        opt.rel_tol = 1e-13;
        const auto res = integrate([&](double r) -> ComplexMatrix { return kernel_row(r); }, 0.0, x_, cuts_, opt);
        return M + res.value * M;
    }

private:
    double x_;
    int p_;
    std::vector<double> d_;
    std::optional<InverseKernel> kernel_;
    std::vector<ComplexMatrix> above_, below_;
    std::vector<double> cuts_;
};

inline ComplexMatrix vplus_apply_const(const Realization& r, const ComplexMatrix& M, double x) {
    return VPlusAdjoint(r, x).apply_const(M);
}

inline void require_invertible_beta(const Realization& r) {
    const double rc = rcond_svd(r.beta);
    if (rc < kSingularRcond) throw DomainError("closed-form recovery requires det beta != 0");
}

/// Closed-form gamma_0(x) with U, P^x rebuilt for length x; all p rows.
inline ComplexMatrix gamma0_matrix(const VPlusAdjoint& vp, const Realization& r) {
    require_invertible_beta(r);
    const int p = r.p(), n = r.n();
    const double x = vp.x();
    const ComplexMatrix tail = solve(r.beta.adjoint(), r.theta1);  // (beta^*)^{-1} theta1
    if (x == 0.0) return r.theta2.adjoint() * tail;
    const auto& K = *vp.kernel();
    const auto& F = K.fundamental();
    const ComplexMatrix& P = K.p_cross();
    const ComplexMatrix Id = identity(2 * n);
    ComplexMatrix E = ComplexMatrix::Zero(2 * n, n);
    E.topRows(n) = identity(n);
    const ComplexMatrix U1_inv = F.U_inverse(r.D.max() * x);
    const ComplexMatrix R = right_factor(r);
    ComplexMatrix out(p, p);
    for (int s = 0; s < p; ++s) {
        const double ys = r.D.d(s) * x;
        const ComplexMatrix Us_inv = F.U_inverse(ys);
        const ComplexMatrix lead = r.theta2.adjoint().row(s) * mat_exp(I_unit * ys * r.beta.adjoint());
        const ComplexMatrix corr = R.row(s) * F.V(ys) * (P * U1_inv - Us_inv + Id - P) * E;
        out.row(s) = (lead + corr) * tail;
    }
    return out;
}

/// Row s (0-based) of gamma_0(x).
inline ComplexMatrix gamma0(const Realization& r, double x, int s) {
    if (s < 0 || s >= r.p()) throw DomainError("gamma0: row out of range");
    return gamma0_matrix(VPlusAdjoint(r, x), r).row(s);
}

/// gamma_0 by quadrature: V_+^* applied to rows e_s theta2^* e^{i d_s r beta^*} (beta^*)^{-1} theta1.
inline ComplexMatrix gamma0_quadrature(const VPlusAdjoint& vp, const Realization& r) {
    require_invertible_beta(r);
    const ComplexMatrix tail = solve(r.beta.adjoint(), r.theta1);
    return vp.apply([&](double t) -> ComplexMatrix {
        ComplexMatrix m(r.p(), r.p());
        for (int s = 0; s < r.p(); ++s)
            m.row(s) = r.theta2.adjoint().row(s) * mat_exp(I_unit * r.D.d(s) * t * r.beta.adjoint()) * tail;
        return m;
    });
}

enum class GammaRoute {
    kernel,       // V_+^* [Phi_1, I] by quadrature over Phi_1
    closed_form,  // V_+^* on constants minus i [gamma_0, 0]
    automatic,    // closed_form when det beta != 0, else kernel
};

inline ComplexMatrix gamma_at_zero(const Realization& r) {
    return hstack(0.5 * r.D.matrix(), identity(r.p()));
}

inline ComplexMatrix recover_gamma(const VPlusAdjoint& vp, const Realization& r, GammaRoute route) {
    const int p = r.p();
    if (vp.x() == 0.0) return gamma_at_zero(r);
    if (route == GammaRoute::automatic)
        route = rcond_svd(r.beta) >= kSingularRcond ? GammaRoute::closed_form : GammaRoute::kernel;
    if (route == GammaRoute::kernel)
        return vp.apply([&](double t) -> ComplexMatrix { return hstack(phi1(r, t), identity(p)); });

    require_invertible_beta(r);
    const ComplexMatrix c =
        0.5 * r.D.matrix() + I_unit * r.theta2.adjoint() * solve(r.beta.adjoint(), r.theta1);
    ComplexMatrix g = vp.apply_const(hstack(c, identity(p)));
    g.leftCols(p) -= I_unit * gamma0_matrix(vp, r);
    return g;
}

/// gamma(x), p x 2p, for 0 <= x <= l. Requires the realization identity.
inline ComplexMatrix recover_gamma(const Realization& r, double x, GammaRoute route = GammaRoute::automatic) {
    require_identity(r);
    return recover_gamma(VPlusAdjoint(r, x), r, route);
}

struct HamiltonianGrid {
    std::vector<double> x;
    std::vector<ComplexMatrix> gamma;  // p x 2p
    std::vector<ComplexMatrix> H;      // 2p x 2p

    [[nodiscard]] std::size_t size() const { return x.size(); }
};

inline HamiltonianGrid recover_hamiltonian(const Realization& r, const std::vector<double>& xs,
                                           GammaRoute route = GammaRoute::automatic) {
    require_identity(r);
    for (double x : xs)
        if (x < 0.0 || x > r.l * (1.0 + 1e-14)) throw DomainError("recover_hamiltonian: sample outside [0, l]");
    HamiltonianGrid out{xs, std::vector<ComplexMatrix>(xs.size()), std::vector<ComplexMatrix>(xs.size())};
    parallel_for(xs.size(), [&](std::size_t m) {
        out.gamma[m] = recover_gamma(VPlusAdjoint(r, xs[m]), r, route);
        out.H[m] = out.gamma[m].adjoint() * out.gamma[m];
    });
    return out;
}

/// Uniform grid 0, l/M, ..., l (M even, so that it suits the matrizant).
inline std::vector<double> uniform_grid(double l, int M) {
    std::vector<double> xs(static_cast<std::size_t>(M + 1));
    for (int m = 0; m <= M; ++m) xs[static_cast<std::size_t>(m)] = l * m / M;
    return xs;
}

/// W(x, lambda) at the even-indexed grid points, by RK4 with step
/// x_{2m+2} - x_{2m} and the odd-indexed samples as stage midpoints.
inline std::vector<ComplexMatrix> matrizant_trajectory(const HamiltonianGrid& grid, cplx lambda) {
    const std::size_t count = grid.size();
    if (count < 201 || count % 2 == 0)
        throw DomainError("matrizant: need an odd number (>= 201) of Hamiltonian samples");
    if (grid.x.front() != 0.0) throw DomainError("matrizant: grid must start at x = 0");
    for (std::size_t m = 0; m + 2 < count; m += 2) {
        const double mid = 0.5 * (grid.x[m] + grid.x[m + 2]);
        if (std::abs(grid.x[m + 1] - mid) > 1e-12 * (1.0 + std::abs(mid)))
            throw DomainError("matrizant: odd samples must be panel midpoints");
    }
    const int m2 = static_cast<int>(grid.H.front().rows());
    const ComplexMatrix J = j_signature(m2 / 2);
    std::vector<ComplexMatrix> traj{identity(m2)};
    for (std::size_t m = 0; m + 2 < count; m += 2) {
        const double h = grid.x[m + 2] - grid.x[m];
        const ComplexMatrix G0 = I_unit * lambda * J * grid.H[m];
        const ComplexMatrix Gm = I_unit * lambda * J * grid.H[m + 1];
        const ComplexMatrix G1 = I_unit * lambda * J * grid.H[m + 2];
        const ComplexMatrix& W = traj.back();
        const ComplexMatrix k1 = G0 * W;
        const ComplexMatrix k2 = Gm * (W + 0.5 * h * k1);
        const ComplexMatrix k3 = Gm * (W + 0.5 * h * k2);
        const ComplexMatrix k4 = G1 * (W + h * k3);
        traj.push_back(W + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    return traj;
}

inline ComplexMatrix matrizant(const HamiltonianGrid& grid, cplx lambda) {
    return matrizant_trajectory(grid, lambda).back();
}

struct WeylInequality {
    double lhs = 0.0;         // trace of the H-weighted energy integral
    double rhs = 0.0;         // trace of i (lambda - conj lambda)^{-1} [I, i phi^*] J [I; -i phi]
    double min_eig_gap = 0.0;  // smallest eigenvalue of rhs_matrix - lhs_matrix

    [[nodiscard]] bool holds(double rel = 1e-3) const { return lhs <= rhs * (1.0 + rel); }
};

/// Energy inequality for the column [I; -i phi(lambda)] along the recovered
/// system; the integral uses Simpson panels with Hermite-interpolated
/// midpoint values of W.
inline WeylInequality weyl_property_check(const HamiltonianGrid& grid, const WeylFunction& W, cplx lambda) {
    if (!(lambda.imag() > 0.0)) throw DomainError("weyl_property_check: Im lambda must be positive");
    const auto traj = matrizant_trajectory(grid, lambda);
    const ComplexMatrix phi = W(lambda);
    const int p = static_cast<int>(phi.rows());
    const ComplexMatrix J = j_signature(p);
    const ComplexMatrix col = vstack(identity(p), -I_unit * phi);

    auto energy = [&](const ComplexMatrix& Wx, const ComplexMatrix& Hx) -> ComplexMatrix {
        const ComplexMatrix w = Wx * col;
        return w.adjoint() * Hx * w;
    };
    ComplexMatrix lhs = ComplexMatrix::Zero(p, p);
    for (std::size_t m = 0; m + 1 < traj.size(); ++m) {
        const std::size_t e0 = 2 * m, e1 = 2 * m + 2;
        const double h = grid.x[e1] - grid.x[e0];
        const ComplexMatrix& W0 = traj[m];
        const ComplexMatrix& W1 = traj[m + 1];
        const ComplexMatrix d0 = I_unit * lambda * J * grid.H[e0] * W0;
        const ComplexMatrix d1 = I_unit * lambda * J * grid.H[e1] * W1;
        const ComplexMatrix Wmid = 0.5 * (W0 + W1) + (h / 8.0) * (d0 - d1);
        lhs += (h / 6.0) * (energy(W0, grid.H[e0]) + 4.0 * energy(Wmid, grid.H[e0 + 1]) + energy(W1, grid.H[e1]));
    }
    const ComplexMatrix rhs = (I_unit / (lambda - std::conj(lambda))) * (col.adjoint() * J * col);
    WeylInequality out;
    out.lhs = lhs.trace().real();
    out.rhs = rhs.trace().real();
    out.min_eig_gap = min_hermitian_eigenvalue(rhs - lhs);
    return out;
}

struct SimilarityFactor {
    ComplexMatrix L;            // [D^{-1/2} gamma; X~]
    ComplexMatrix L_inv_closed;  // [J gamma^* D^{-1/2}, -J X~^*]
    double residual = 0.0;      // ||L^{-1} H_0 L - J gamma^* gamma||
};

/// Similarity L^{-1} H_0 L = J H(x) with H_0 = diag(D, 0).
inline SimilarityFactor similarity_factor(const ComplexMatrix& gamma, const DiagonalStructure& D) {
    const int p = D.p();
    if (gamma.rows() != p || gamma.cols() != 2 * p) throw DimensionError("similarity_factor: gamma must be p x 2p");
    const ComplexMatrix J = j_signature(p);
    const ComplexMatrix Dm = D.matrix();
    if ((gamma * J * gamma.adjoint() - Dm).norm() > 1e-6 * std::max(1.0, Dm.norm()))
        throw DomainError("similarity_factor: gamma J gamma^* differs from D");

    Eigen::JacobiSVD<ComplexMatrix> svd(gamma * J, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(p - 1) > 1e-10 * sv(0))) throw DomainError("similarity_factor: gamma J is rank deficient");
    const ComplexMatrix X = svd.matrixV().rightCols(p).adjoint();  // X J gamma^* = 0

    const ComplexMatrix Xt = hermitian_inv_sqrt(-(X * J * X.adjoint())) * X;
    const ComplexMatrix Dm_inv_sqrt = D.power_matrix(-0.5);
    SimilarityFactor out;
    out.L = vstack(Dm_inv_sqrt * gamma, Xt);
    out.L_inv_closed = hstack(J * gamma.adjoint() * Dm_inv_sqrt, -(J * Xt.adjoint()));
    const ComplexMatrix H0 = block_diag(Dm, ComplexMatrix::Zero(p, p));
    const ComplexMatrix L_inv = inverse(out.L);
    out.residual = (L_inv * H0 * out.L - J * gamma.adjoint() * gamma).norm();
    return out;
}

}  // namespace dkinv
