#pragma once

// Discretization and ODE oracles. Everything here is built from kernel
// samples, plain quadrature and Runge-Kutta steps so that it can check the
// closed-form inversion and recovery formulas independently.

#include "dkinv/dkernel.hpp"
#include "dkinv/inversion.hpp"
#include "dkinv/linalg.hpp"
#include "dkinv/parallel.hpp"
#include "dkinv/quadrature.hpp"
#include "dkinv/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dkinv {

/// Composite midpoint grid: N nodes per component on [0, l].
struct Grid {
    int N = 0;
    double l = 1.0;

    [[nodiscard]] double weight() const { return l / N; }
    [[nodiscard]] double node(int a) const { return (a + 0.5) * l / N; }
    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> out(static_cast<std::size_t>(N));
        for (int a = 0; a < N; ++a) out[static_cast<std::size_t>(a)] = node(a);
        return out;
    }
};

/// Nystrom matrix of I + (integral operator) on a midpoint grid. Rows and
/// columns are ordered component-major: index i * N + a.
struct DiscreteOperator {
    Grid grid;
    int p = 0;
    ComplexMatrix matrix;

    [[nodiscard]] Eigen::Index size() const { return matrix.rows(); }
};

namespace detail {

inline bool same_line(double u, double scale) { return std::abs(u) <= 1e-12 * scale; }

}  // namespace detail

/// Midpoint Nystrom discretization of S = I + int_0^l k(x, t) . dt. Where the
/// line d_i x = d_j t passes through a node pair the Hermitian part of k(0)
/// (the mean of both one-sided limits) is used.
inline DiscreteOperator discretize_S(const Realization& r, int N) {
    if (N < 8) throw DomainError("discretize_S: grid size must be at least 8");
    const int p = r.p();
    const Grid g{N, r.l};
    const double h = g.weight();
    const double scale = r.a();

    // k(u) depends only on |u| up to an adjoint; evaluate each distinct |u| once.
    std::unordered_map<double, std::size_t> slot;
    std::vector<double> args;
    auto arg = [&](int i, int a, int j, int b) { return r.D.d(i) * g.node(a) - r.D.d(j) * g.node(b); };
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                    const double u = std::abs(arg(i, a, j, b));
                    if (detail::same_line(u, scale)) continue;
                    if (slot.emplace(u, args.size()).second) args.push_back(u);
                }
    std::vector<ComplexMatrix> values(args.size());
    parallel_for(args.size(), [&](std::size_t m) { values[m] = kernel_k(r, args[m]); });
    const ComplexMatrix k0 = kernel_k(r, 0.0);
    const ComplexMatrix k0_sym = 0.5 * (k0 + k0.adjoint());

    DiscreteOperator op{g, p, identity(p * N)};
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                    const double u = arg(i, a, j, b);
                    cplx v;
                    if (detail::same_line(u, scale))
                        v = k0_sym(i, j);
                    else if (u > 0.0)
                        v = values[slot.at(u)](i, j);
                    else
                        v = std::conj(values[slot.at(-u)](j, i));
                    op.matrix(i * N + a, j * N + b) += v * h;
                }
    return op;
}

/// Nystrom matrix of I + int T(x, t) . dt from the explicit inverse kernel;
/// node pairs on a line d_i x = d_j t use the mean of both branches.
inline DiscreteOperator discretize_T(const InverseKernel& K, int N) {
    if (N < 8) throw DomainError("discretize_T: grid size must be at least 8");
    const auto& r = K.realization();
    const int p = r.p();
    const Grid g{N, r.l};
    const double h = g.weight();
    const int two_n = 2 * r.n();

    std::vector<ComplexMatrix> rows(static_cast<std::size_t>(p * N)), cols(static_cast<std::size_t>(p * N));
    parallel_for(static_cast<std::size_t>(p * N), [&](std::size_t m) {
        const int i = static_cast<int>(m) / N, a = static_cast<int>(m) % N;
        rows[m] = K.row_factor(i, g.node(a));
        cols[m] = K.col_factor(i, g.node(a));
    });
    ComplexMatrix R(p * N, two_n), C(two_n, p * N);
    for (int m = 0; m < p * N; ++m) {
        R.row(m) = rows[static_cast<std::size_t>(m)];
        C.col(m) = cols[static_cast<std::size_t>(m)];
    }
    const ComplexMatrix upper = R * (identity(two_n) - K.p_cross()) * C;
    const ComplexMatrix lower = -(R * K.p_cross() * C);

    DiscreteOperator op{g, p, identity(p * N)};
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int a = 0; a < N; ++a)
                for (int b = 0; b < N; ++b) {
                    const Eigen::Index row = i * N + a, col = j * N + b;
                    const double lhs = r.D.d(i) * g.node(a), rhs = r.D.d(j) * g.node(b);
                    cplx v;
                    if (K.on_line(lhs, rhs))
                        v = 0.5 * (upper(row, col) + lower(row, col));
                    else
                        v = lhs > rhs ? upper(row, col) : lower(row, col);
                    op.matrix(row, col) += v * h;
                }
    return op;
}

struct SpectrumBounds {
    double min = 0.0;
    double max = 0.0;
};

/// Extreme eigenvalues of the symmetrized matrix. Rejects input whose
/// anti-Hermitian part exceeds 1e-8 relative.
inline SpectrumBounds positivity_spectrum(const DiscreteOperator& op) {
    const ComplexMatrix& M = op.matrix;
    const double asym = (M - M.adjoint()).norm();
    if (asym > 1e-8 * std::max(1.0, M.norm())) throw DomainError("positivity_spectrum: operator is not Hermitian");
    const ComplexMatrix sym = 0.5 * (M + M.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

/// Discretization of A = i D int_0^x . dt (cumulative midpoint rule, half
/// weight on the diagonal).
inline ComplexMatrix volterra_matrix(const DiagonalStructure& D, const Grid& g) {
    const int p = D.p(), N = g.N;
    const double h = g.weight();
    ComplexMatrix A = ComplexMatrix::Zero(p * N, p * N);
    for (int i = 0; i < p; ++i)
        for (int a = 0; a < N; ++a) {
            for (int b = 0; b < a; ++b) A(i * N + a, i * N + b) = I_unit * D.d(i) * h;
            A(i * N + a, i * N + a) = 0.5 * I_unit * D.d(i) * h;
        }
    return A;
}

/// Samples of Pi(x) = [Phi_1(x), I_p] on the grid, (pN) x 2p.
inline ComplexMatrix pi_samples(const Realization& r, const Grid& g) {
    const int p = r.p(), N = g.N;
    ComplexMatrix Pi = ComplexMatrix::Zero(p * N, 2 * p);
    std::vector<ComplexMatrix> phis(static_cast<std::size_t>(N));
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t a) { phis[a] = phi1(r, g.node(static_cast<int>(a))); });
    for (int a = 0; a < N; ++a)
        for (int i = 0; i < p; ++i) {
            Pi.block(i * N + a, 0, 1, p) = phis[static_cast<std::size_t>(a)].row(i);
            Pi(i * N + a, p + i) = 1.0;
        }
    return Pi;
}

/// J = [[0, I_p], [I_p, 0]].
inline ComplexMatrix j_signature(int p) {
    ComplexMatrix J = ComplexMatrix::Zero(2 * p, 2 * p);
    J.topRightCorner(p, p) = identity(p);
    J.bottomLeftCorner(p, p) = identity(p);
    return J;
}

/// ||A_N S_N - S_N A_N^* - i Pi_N J Pi_N^* w|| / ||S_N||.
inline double operator_identity_residual(const Realization& r, int N) {
    const auto S = discretize_S(r, N);
    const ComplexMatrix A = volterra_matrix(r.D, S.grid);
    const ComplexMatrix Pi = pi_samples(r, S.grid);
    const ComplexMatrix lhs = A * S.matrix - S.matrix * A.adjoint();
    const ComplexMatrix rhs = I_unit * Pi * j_signature(r.p()) * Pi.adjoint() * S.grid.weight();
    return (lhs - rhs).norm() / S.matrix.norm();
}

/// Pi_x^* S_x^{-1} Pi_x on [0, x] by Nystrom discretization with N nodes.
inline ComplexMatrix discrete_node_form(const Realization& r, double x, int N) {
    const Realization rx = r.with_length(x);
    const auto S = discretize_S(rx, N);
    const ComplexMatrix Pi = pi_samples(rx, S.grid);
    return S.grid.weight() * Pi.adjoint() * S.matrix.partialPivLu().solve(Pi);
}

/// Central difference of x -> Pi_x^* S_x^{-1} Pi_x.
inline ComplexMatrix hamiltonian_fd(const Realization& r, double x, int N, double h) {
    return (discrete_node_form(r, x + h, N) - discrete_node_form(r, x - h, N)) / (2.0 * h);
}

/// W(l, lambda) = I + i lambda J Pi^* S^{-1} (I - lambda A)^{-1} Pi, discretized.
inline ComplexMatrix discrete_matrizant(const Realization& r, cplx lambda, int N) {
    const auto S = discretize_S(r, N);
    const ComplexMatrix A = volterra_matrix(r.D, S.grid);
    const ComplexMatrix Pi = pi_samples(r, S.grid);
    const ComplexMatrix resolvent = (identity(A.rows()) - lambda * A).partialPivLu().solve(Pi);
    const ComplexMatrix inner = S.matrix.partialPivLu().solve(resolvent);
    return identity(2 * r.p()) +
           I_unit * lambda * j_signature(r.p()) * (S.grid.weight() * Pi.adjoint() * inner);
}

/// RK4 integration of U' = B(y) C(y) U, U(0) = I, with steps aligned to the
/// breakpoints d~_j l so that no step straddles a jump of B C.
class Rk4Fundamental {
public:
    Rk4Fundamental(Realization r, int steps) : r_(std::move(r)) {
        if (steps < 100) throw DomainError("rk4_fundamental: at least 100 steps required");
        A_ = generator_A(r_);
        const int k = r_.D.k();
        const double a = r_.a();
        for (int j = k + 1; j >= 2; --j) {
            Segment seg;
            seg.j = j;
            seg.start = r_.D.level(j) * r_.l;
            seg.end = r_.D.level(j - 1) * r_.l;
            seg.Y = y_matrix(r_, j);
            const int m = std::max(1, static_cast<int>(std::ceil(steps * (seg.end - seg.start) / a)));
            seg.h = (seg.end - seg.start) / m;
            seg.nodes.push_back(segments_.empty() ? identity(2 * r_.n()) : segments_.back().nodes.back());
            for (int s = 0; s < m; ++s) {
                const double y = seg.start + s * seg.h;
                seg.nodes.push_back(step(seg, y, seg.h, seg.nodes.back()));
            }
            segments_.push_back(std::move(seg));
        }
    }

    [[nodiscard]] ComplexMatrix operator()(double y) const {
        if (y < 0.0 || y > r_.a() * (1.0 + 1e-14)) throw DomainError("rk4_fundamental: y outside [0, d_1 l]");
        for (const auto& seg : segments_) {
            if (y > seg.end && &seg != &segments_.back()) continue;
            const int m = static_cast<int>(seg.nodes.size()) - 1;
            int s = static_cast<int>(std::floor((y - seg.start) / seg.h));
            s = std::clamp(s, 0, m);
            const double y0 = seg.start + s * seg.h;
            const double dy = y - y0;
            if (dy <= 0.0) return seg.nodes[static_cast<std::size_t>(s)];
            return step(seg, y0, dy, seg.nodes[static_cast<std::size_t>(s)]);
        }
        return segments_.back().nodes.back();
    }

private:
    struct Segment {
        int j = 0;
        double start = 0.0, end = 0.0, h = 0.0;
        ComplexMatrix Y;
        std::vector<ComplexMatrix> nodes;
    };

    [[nodiscard]] ComplexMatrix rhs(const Segment& seg, double y) const {
        return mat_exp(-y * A_) * seg.Y * mat_exp(y * A_);
    }

    [[nodiscard]] ComplexMatrix step(const Segment& seg, double y, double h, const ComplexMatrix& U) const {
        const ComplexMatrix G0 = rhs(seg, y);
        const ComplexMatrix Gm = rhs(seg, y + 0.5 * h);
        const ComplexMatrix G1 = rhs(seg, y + h);
        const ComplexMatrix k1 = G0 * U;
        const ComplexMatrix k2 = Gm * (U + 0.5 * h * k1);
        const ComplexMatrix k3 = Gm * (U + 0.5 * h * k2);
        const ComplexMatrix k4 = G1 * (U + h * k3);
        return U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    Realization r_;
    ComplexMatrix A_;
    std::vector<Segment> segments_;
};

inline Rk4Fundamental rk4_fundamental(const Realization& r, int steps) { return Rk4Fundamental(r, steps); }

/// Relative mismatch between lambda int_0^Xmax e^{i lambda x} s(x)^* dx D
/// (adaptive quadrature) and phi(lambda).
inline double fourier_weyl_check(const Realization& r, cplx lambda, double x_max) {
    if (lambda.imag() < 0.1) throw DomainError("fourier_weyl_check: Im lambda must be at least 0.1");
    if (std::exp(-lambda.imag() * x_max) > 1e-10) throw DomainError("fourier_weyl_check: truncation too short");
    auto integrand = [&](double x) -> ComplexMatrix {
        return std::exp(I_unit * lambda * x) * s_function(r, x).adjoint();
    };
    QuadratureOptions opt;
    opt.abs_tol = 1e-13;
    opt.rel_tol = 1e-12;
    opt.initial_panels = std::max(8, static_cast<int>(std::ceil(x_max * (1.0 + std::abs(lambda.real())))));
    opt.max_intervals = 200000;
    const auto integral = integrate(integrand, 0.0, x_max, {}, opt);
    const ComplexMatrix lhs = lambda * integral.value * r.D.matrix();
    const ComplexMatrix phi = weyl_value(r, lambda);
    return (lhs - phi).norm() / std::max(1e-300, phi.norm());
}

}  // namespace dkinv
