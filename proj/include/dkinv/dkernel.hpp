#pragma once

#include "dkinv/linalg.hpp"
#include "dkinv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dkinv {

/// Positive diagonal D = diag(d_1, ..., d_p) with d_1 >= ... >= d_p > 0,
/// grouped into k distinct levels d~_1 > ... > d~_k with multiplicities.
class DiagonalStructure {
public:
    DiagonalStructure() = default;

    explicit DiagonalStructure(std::vector<double> d) : d_(std::move(d)) {
        if (d_.empty()) throw DimensionError("DiagonalStructure: empty diagonal");
        for (std::size_t i = 0; i < d_.size(); ++i) {
            if (!std::isfinite(d_[i]) || !(d_[i] > 0.0))
                throw DomainError("DiagonalStructure: entries must be positive and finite");
            if (i > 0 && d_[i] > d_[i - 1]) throw DomainError("DiagonalStructure: entries must be non-increasing");
        }
        for (double v : d_) {
            if (levels_.empty() || v < levels_.back()) {
                levels_.push_back(v);
                multiplicities_.push_back(1);
            } else {
                ++multiplicities_.back();
            }
            level_of_.push_back(static_cast<int>(levels_.size()));  // 1-based level
        }
    }

    [[nodiscard]] int p() const { return static_cast<int>(d_.size()); }
    /// Number of distinct levels.
    [[nodiscard]] int k() const { return static_cast<int>(levels_.size()); }
    [[nodiscard]] const std::vector<double>& values() const { return d_; }
    [[nodiscard]] double d(int i) const { return d_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] double max() const { return d_.front(); }
    [[nodiscard]] const std::vector<int>& multiplicities() const { return multiplicities_; }

    /// d~_j for 1 <= j <= k+1, with d~_{k+1} = 0.
    [[nodiscard]] double level(int j) const {
        if (j < 1 || j > k() + 1) throw DomainError("DiagonalStructure::level: index out of range");
        return j == k() + 1 ? 0.0 : levels_[static_cast<std::size_t>(j - 1)];
    }

    /// 1-based level index of component i (0-based).
    [[nodiscard]] int level_of(int i) const { return level_of_.at(static_cast<std::size_t>(i)); }

    [[nodiscard]] ComplexMatrix matrix() const {
        ComplexMatrix m = ComplexMatrix::Zero(p(), p());
        for (int i = 0; i < p(); ++i) m(i, i) = d_[static_cast<std::size_t>(i)];
        return m;
    }
    [[nodiscard]] ComplexMatrix inverse_matrix() const {
        ComplexMatrix m = ComplexMatrix::Zero(p(), p());
        for (int i = 0; i < p(); ++i) m(i, i) = 1.0 / d_[static_cast<std::size_t>(i)];
        return m;
    }
    [[nodiscard]] ComplexMatrix power_matrix(double exponent) const {
        ComplexMatrix m = ComplexMatrix::Zero(p(), p());
        for (int i = 0; i < p(); ++i) m(i, i) = std::pow(d_[static_cast<std::size_t>(i)], exponent);
        return m;
    }

private:
    std::vector<double> d_;
    std::vector<double> levels_;
    std::vector<int> multiplicities_;
    std::vector<int> level_of_;
};

/// P_j: identity on the blocks of levels 1..j-1, zero elsewhere; P_{k+1} = I_p.
inline ComplexMatrix projector(const DiagonalStructure& D, int j) {
    if (j < 2 || j > D.k() + 1) throw DomainError("projector: level index must lie in 2..k+1");
    ComplexMatrix P = ComplexMatrix::Zero(D.p(), D.p());
    for (int i = 0; i < D.p(); ++i)
        if (D.level_of(i) <= j - 1) P(i, i) = 1.0;
    return P;
}

/// Exponential-type data (theta1, theta2, beta) of the kernel
/// k(x) = theta2^* exp(i x beta^*) theta1 on an interval of length l.
struct Realization {
    ComplexMatrix theta1;  // n x p
    ComplexMatrix theta2;  // n x p
    ComplexMatrix beta;    // n x n
    DiagonalStructure D;
    double l = 1.0;

    Realization() = default;
    Realization(ComplexMatrix t1, ComplexMatrix t2, ComplexMatrix b, DiagonalStructure d, double length)
        : theta1(std::move(t1)), theta2(std::move(t2)), beta(std::move(b)), D(std::move(d)), l(length) {
        validate_shape();
    }

    [[nodiscard]] int n() const { return static_cast<int>(beta.rows()); }
    [[nodiscard]] int p() const { return D.p(); }
    /// Right end a = d_1 l of the rescaled interval.
    [[nodiscard]] double a() const { return D.max() * l; }

    [[nodiscard]] Realization with_length(double length) const {
        Realization r = *this;
        r.l = length;
        r.validate_shape();
        return r;
    }

    void validate_shape() const {
        const auto n_ = beta.rows();
        if (beta.cols() != n_ || n_ == 0) throw DimensionError("Realization: beta must be square and non-empty");
        if (theta1.rows() != n_ || theta2.rows() != n_ || theta1.cols() != D.p() || theta2.cols() != D.p())
            throw DimensionError("Realization: theta1/theta2 must be n x p");
        if (!all_finite(theta1) || !all_finite(theta2) || !all_finite(beta))
            throw DomainError("Realization: non-finite entries");
        if (!std::isfinite(l) || !(l > 0.0)) throw DomainError("Realization: interval length must be positive");
    }
};

/// Frobenius norm of beta^* - beta - i (theta2 - theta1) D^{-1} (theta2 - theta1)^*.
inline double identity_residual(const Realization& r) {
    const ComplexMatrix diff = r.theta2 - r.theta1;
    const ComplexMatrix rhs = I_unit * diff * r.D.inverse_matrix() * diff.adjoint();
    return (r.beta.adjoint() - r.beta - rhs).norm();
}

inline double identity_tolerance(const Realization& r) { return 1e-10 * (1.0 + r.beta.norm()); }

inline bool satisfies_identity(const Realization& r) { return identity_residual(r) <= identity_tolerance(r); }

/// Largest imaginary part over the spectrum of beta.
inline double max_imag_spectrum(const Realization& r) {
    double m = -std::numeric_limits<double>::infinity();
    for (cplx z : eig_spectrum(r.beta)) m = std::max(m, z.imag());
    return m;
}

/// Throws DomainError unless the realization satisfies the matrix identity
/// that makes the operator positive (required by the inverse problem).
inline void require_identity(const Realization& r) {
    const double res = identity_residual(r);
    if (!(res <= identity_tolerance(r)))
        throw DomainError("realization violates beta^* - beta = i(theta2-theta1)D^{-1}(theta2-theta1)^*: residual " +
                          std::to_string(res));
}

/// k(x) for |x| <= d_1 l. k(0) is the one-sided limit theta2^* theta1.
inline ComplexMatrix kernel_k(const Realization& r, double x) {
    if (std::abs(x) > r.a() * (1.0 + 1e-14)) throw DomainError("kernel_k: |x| exceeds d_1 l");
    if (x < 0.0) return kernel_k(r, -x).adjoint();
    return r.theta2.adjoint() * mat_exp(I_unit * x * r.beta.adjoint()) * r.theta1;
}

/// int_0^x exp(i u beta^*) du via the exponential of [[i beta^*, I], [0, 0]].
inline ComplexMatrix exp_integral(const ComplexMatrix& beta, double x) {
    const auto n = beta.rows();
    ComplexMatrix aug = ComplexMatrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = I_unit * beta.adjoint();
    aug.topRightCorner(n, n) = identity(n);
    return mat_exp(x * aug).topRightCorner(n, n);
}

/// s(x) = I/2 + D^{-1} theta2^* (int_0^x exp(i u beta^*) du) theta1, x >= 0.
inline ComplexMatrix s_function(const Realization& r, double x) {
    if (!(x >= 0.0)) throw DomainError("s_function: argument must be non-negative");
    return 0.5 * identity(r.p()) + r.D.inverse_matrix() * r.theta2.adjoint() * exp_integral(r.beta, x) * r.theta1;
}

/// s(x) extended to x < 0 by s(x) = -D^{-1} s(-x)^* D.
inline ComplexMatrix s_signed(const Realization& r, double x) {
    if (x >= 0.0) return s_function(r, x);
    return -r.D.inverse_matrix() * s_function(r, -x).adjoint() * r.D.matrix();
}

/// s(x, t) with entries s_ij(d_i x - d_j t).
inline ComplexMatrix s_two_point(const Realization& r, double x, double t) {
    const int p = r.p();
    ComplexMatrix out(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const double u = r.D.d(i) * x - r.D.d(j) * t;
            out(i, j) = s_signed(r, u)(i, j);
        }
    return out;
}

/// Phi_1(x) with entries d_i s_ij(d_i x), 0 <= x <= l.
inline ComplexMatrix phi1(const Realization& r, double x) {
    if (x < 0.0 || x > r.l * (1.0 + 1e-14)) throw DomainError("phi1: argument outside [0, l]");
    const int p = r.p();
    ComplexMatrix out(p, p);
    for (int i = 0; i < p; ++i) out.row(i) = r.D.d(i) * s_function(r, r.D.d(i) * x).row(i);
    return out;
}

using MatrixFunction = std::function<ComplexMatrix(double)>;

/// Upsilon_ij(x, t) for the factored kernel Q(x, t) = Q1(x) Q2(t); i, j are
/// 0-based. Adaptive quadrature to `abs_tol`.
inline cplx upsilon_kernel(const MatrixFunction& Q1, const MatrixFunction& Q2, const DiagonalStructure& D, double l,
                           int i, int j, double x, double t, double abs_tol = 1e-9) {
    if (x < 0.0 || x > l || t < 0.0 || t > l) throw DomainError("upsilon_kernel: arguments outside [0, l]");
    if (i < 0 || j < 0 || i >= D.p() || j >= D.p()) throw DomainError("upsilon_kernel: index out of range");
    const double di = D.d(i), dj = D.d(j);
    const double lower = di * x + dj * t;
    const double fmin = std::min(di * (2.0 * l - x) + dj * t, di * x + dj * (2.0 * l - t));
    if (fmin <= lower) return {0.0, 0.0};
    auto integrand = [&](double u) {
        const ComplexMatrix q = Q1((u + di * x - dj * t) / (2.0 * di)).row(i) * Q2((u - di * x + dj * t) / (2.0 * dj)).col(j);
        return q;
    };
    QuadratureOptions opt;
    opt.abs_tol = abs_tol;
    opt.rel_tol = 1e-12;
    const auto res = integrate(integrand, lower, fmin, {}, opt);
    return res.value(0, 0) / (2.0 * di * dj);
}

}  // namespace dkinv
