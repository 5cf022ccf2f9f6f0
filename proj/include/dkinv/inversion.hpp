#pragma once

#include "dkinv/dkernel.hpp"
#include "dkinv/linalg.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkinv {

/// S (equivalently its rescaled semiseparable form) is not invertible.
class SingularOperatorError : public std::runtime_error {
public:
    SingularOperatorError(const std::string& what, double length, double rcond)
        : std::runtime_error(what), length_(length), rcond_(rcond) {}
    /// Interval length at which invertibility failed.
    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] double rcond() const noexcept { return rcond_; }

private:
    double length_;
    double rcond_;
};

/// J~ = [[0, -I_n], [I_n, 0]].
inline ComplexMatrix j_tilde(int n) {
    ComplexMatrix J = ComplexMatrix::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = -identity(n);
    J.bottomLeftCorner(n, n) = identity(n);
    return J;
}

/// Index j in 2..k+1 with d~_j l <= y < d~_{j-1} l; y = a maps to 2.
inline int segment_index(const Realization& r, double y) {
    const int k = r.D.k();
    if (y < 0.0 || y > r.a() * (1.0 + 1e-14)) throw DomainError("segment_index: y outside [0, d_1 l]");
    for (int j = 2; j <= k; ++j)
        if (y >= r.D.level(j) * r.l) return j;
    return k + 1;
}

/// Generator cal-A = i diag(beta^*, beta).
inline ComplexMatrix generator_A(const Realization& r) {
    return I_unit * block_diag(r.beta.adjoint(), r.beta);
}

/// [-theta1; theta2], 2n x p.
inline ComplexMatrix left_factor(const Realization& r) { return vstack(-r.theta1, r.theta2); }

/// [theta2^*, theta1^*], p x 2n.
inline ComplexMatrix right_factor(const Realization& r) { return hstack(r.theta2.adjoint(), r.theta1.adjoint()); }

/// Y_j = [-theta1; theta2] D^{-1} P_j [theta2^*, theta1^*].
inline ComplexMatrix y_matrix(const Realization& r, int j) {
    return left_factor(r) * r.D.inverse_matrix() * projector(r.D, j) * right_factor(r);
}

struct SemiseparableFactors {
    ComplexMatrix B;  // 2n x p
    ComplexMatrix C;  // p x 2n
};

/// B(y), C(y) of the rescaled kernel on the given segment.
inline SemiseparableFactors build_BC(const Realization& r, double y, int segment) {
    if (y < 0.0 || y > r.a() * (1.0 + 1e-14)) throw DomainError("build_BC: y outside [0, d_1 l]");
    const ComplexMatrix A = generator_A(r);
    const ComplexMatrix P = projector(r.D, segment);
    return {mat_exp(-y * A) * left_factor(r) * r.D.inverse_matrix() * P, P * right_factor(r) * mat_exp(y * A)};
}

inline SemiseparableFactors build_BC(const Realization& r, double y) { return build_BC(r, y, segment_index(r, y)); }

/// Piecewise-exponential fundamental solution U(y) of U' = B(y) C(y) U on
/// [0, d_1 l], U(0) = I. Internally stores V(y) = e^{yA} U(y), which is a
/// single exponential of A + Y_j on each segment.
class FundamentalSolution {
public:
    explicit FundamentalSolution(Realization r) : r_(std::move(r)) {
        r_.validate_shape();
        n_ = r_.n();
        A_ = generator_A(r_);
        J_ = j_tilde(n_);
        const int k = r_.D.k();
        // slots indexed by segment j = 2..k+1
        A_cross_.resize(static_cast<std::size_t>(k + 2));
        Y_.resize(static_cast<std::size_t>(k + 2));
        start_.resize(static_cast<std::size_t>(k + 2));
        V_start_.resize(static_cast<std::size_t>(k + 2));
        for (int j = 2; j <= k + 1; ++j) {
            Y_[idx(j)] = y_matrix(r_, j);
            A_cross_[idx(j)] = A_ + Y_[idx(j)];
            start_[idx(j)] = r_.D.level(j) * r_.l;
        }
        V_start_[idx(k + 1)] = identity(2 * n_);
        for (int j = k + 1; j >= 3; --j) {
            const double len = start_[idx(j - 1)] - start_[idx(j)];
            V_start_[idx(j - 1)] = mat_exp(len * A_cross_[idx(j)]) * V_start_[idx(j)];
        }
    }

    [[nodiscard]] const Realization& realization() const { return r_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] double a() const { return r_.a(); }
    [[nodiscard]] const ComplexMatrix& A() const { return A_; }
    [[nodiscard]] const ComplexMatrix& J() const { return J_; }
    [[nodiscard]] const ComplexMatrix& Y(int j) const { return Y_.at(idx(j)); }
    [[nodiscard]] const ComplexMatrix& A_cross(int j) const { return A_cross_.at(idx(j)); }

    /// Breakpoints 0 = d~_{k+1} l < d~_k l < ... < d~_1 l = a.
    [[nodiscard]] std::vector<double> breakpoints() const {
        std::vector<double> out;
        for (int j = r_.D.k() + 1; j >= 1; --j) out.push_back(r_.D.level(j) * r_.l);
        return out;
    }

    /// e^{yA} U(y).
    [[nodiscard]] ComplexMatrix V(double y) const {
        const int j = segment_index(r_, y);
        return mat_exp((y - start_[idx(j)]) * A_cross_[idx(j)]) * V_start_[idx(j)];
    }

    [[nodiscard]] ComplexMatrix U(double y) const { return mat_exp(-y * A_) * V(y); }

    /// U(y)^{-1} from J~-unitarity, U^{-1} = J~^* U^* J~, with an LU fallback
    /// when the unitarity residual is poor.
    [[nodiscard]] ComplexMatrix U_inverse(double y) const { return invert(U(y)); }

    /// U(y)^{-1} e^{-yA} = V(y)^{-1}.
    [[nodiscard]] ComplexMatrix V_inverse(double y) const {
        const ComplexMatrix back = mat_exp(-y * A_);
        return invert(back * V(y)) * back;
    }

    [[nodiscard]] ComplexMatrix invert(const ComplexMatrix& u) const {
        ComplexMatrix inv = J_.adjoint() * u.adjoint() * J_;
        const double res = (u * inv - identity(2 * n_)).norm();
        if (res > 1e-6) inv = inverse(u);
        return inv;
    }

    /// H~(y) = J~^* B(y) C(y).
    [[nodiscard]] ComplexMatrix H_tilde(double y) const {
        const auto bc = build_BC(r_, y);
        return J_.adjoint() * bc.B * bc.C;
    }

private:
    static std::size_t idx(int j) { return static_cast<std::size_t>(j); }

    Realization r_;
    int n_ = 0;
    ComplexMatrix A_;
    ComplexMatrix J_;
    std::vector<ComplexMatrix> A_cross_;
    std::vector<ComplexMatrix> Y_;
    std::vector<double> start_;
    std::vector<ComplexMatrix> V_start_;
};

inline FundamentalSolution fundamental_solution(const Realization& r) { return FundamentalSolution(r); }

/// Outcome of the invertibility test on U_22(a).
struct CrossProjector {
    bool invertible = false;
    double rcond = 0.0;
    ComplexMatrix p_cross;  // 2n x 2n, set when invertible
    ComplexMatrix kernel;   // n x m orthonormal basis of Ker U_22(a), set when singular
};

/// P^x = [[0, 0], [U_22(a)^{-1} U_21(a), I_n]], or a singularity report.
inline CrossProjector p_cross(const FundamentalSolution& F) {
    const int n = F.n();
    const ComplexMatrix Ua = F.U(F.a());
    const ComplexMatrix U21 = Ua.bottomLeftCorner(n, n);
    const ComplexMatrix U22 = Ua.bottomRightCorner(n, n);
    CrossProjector out;
    out.rcond = rcond_svd(U22);
    if (out.rcond < kSingularRcond) {
        out.invertible = false;
        out.kernel = null_space(U22, 1e-8);
        if (out.kernel.cols() == 0) out.kernel = null_space(U22, out.rcond * 1.0000001);
        return out;
    }
    out.invertible = true;
    out.p_cross = ComplexMatrix::Zero(2 * n, 2 * n);
    out.p_cross.bottomLeftCorner(n, n) = U22.partialPivLu().solve(U21);
    out.p_cross.bottomRightCorner(n, n) = identity(n);
    return out;
}

/// How to resolve T_ij on the line d_i x = d_j t.
enum class LineConvention {
    upper_limit,  // one-sided limit from d_i x > d_j t
    average,      // mean of the two one-sided limits
};

/// Explicit kernel T(x, t) of S^{-1} - I.
class InverseKernel {
public:
    InverseKernel(FundamentalSolution F, const CrossProjector& pc) : F_(std::move(F)) {
        if (!pc.invertible) throw std::logic_error("InverseKernel: operator is not invertible");
        P_ = pc.p_cross;
        rcond_ = pc.rcond;
        const auto two_n = 2 * F_.n();
        upper_ = identity(two_n) - P_;
    }

    [[nodiscard]] const FundamentalSolution& fundamental() const { return F_; }
    [[nodiscard]] const Realization& realization() const { return F_.realization(); }
    [[nodiscard]] const ComplexMatrix& p_cross() const { return P_; }
    [[nodiscard]] double rcond() const { return rcond_; }

    /// e_i [theta2^*, theta1^*] e^{d_i x A} U(d_i x), 1 x 2n; i is 0-based.
    [[nodiscard]] ComplexMatrix row_factor(int i, double x) const {
        const auto& r = F_.realization();
        return right_factor(r).row(i) * F_.V(r.D.d(i) * x);
    }

    /// U(d_j t)^{-1} e^{-d_j t A} [-theta1; theta2] e_j^*, 2n x 1.
    [[nodiscard]] ComplexMatrix col_factor(int j, double t) const {
        const auto& r = F_.realization();
        return F_.V_inverse(r.D.d(j) * t) * left_factor(r).col(j);
    }

    /// Combines cached row/column factors; `above` means d_i x > d_j t.
    [[nodiscard]] cplx combine(const ComplexMatrix& row, const ComplexMatrix& col, bool above) const {
        return above ? (row * upper_ * col)(0, 0) : -(row * P_ * col)(0, 0);
    }

    [[nodiscard]] cplx entry(int i, int j, double x, double t,
                             LineConvention conv = LineConvention::upper_limit) const {
        const auto& r = F_.realization();
        check_args(i, j, x, t);
        const ComplexMatrix row = row_factor(i, x);
        const ComplexMatrix col = col_factor(j, t);
        const double lhs = r.D.d(i) * x, rhs = r.D.d(j) * t;
        if (on_line(lhs, rhs)) {
            if (conv == LineConvention::average) return 0.5 * (combine(row, col, true) + combine(row, col, false));
            return combine(row, col, true);
        }
        return combine(row, col, lhs > rhs);
    }

    /// Full p x p value T(x, t).
    [[nodiscard]] ComplexMatrix matrix(double x, double t, LineConvention conv = LineConvention::upper_limit) const {
        const auto& r = F_.realization();
        const int p = r.p();
        std::vector<ComplexMatrix> rows, cols;
        for (int i = 0; i < p; ++i) rows.push_back(row_factor(i, x));
        for (int j = 0; j < p; ++j) cols.push_back(col_factor(j, t));
        ComplexMatrix out(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const double lhs = r.D.d(i) * x, rhs = r.D.d(j) * t;
                const auto& row = rows[static_cast<std::size_t>(i)];
                const auto& col = cols[static_cast<std::size_t>(j)];
                if (on_line(lhs, rhs))
                    out(i, j) = conv == LineConvention::average
                                    ? 0.5 * (combine(row, col, true) + combine(row, col, false))
                                    : combine(row, col, true);
                else
                    out(i, j) = combine(row, col, lhs > rhs);
            }
        return out;
    }

    [[nodiscard]] bool on_line(double lhs, double rhs) const {
        return std::abs(lhs - rhs) <= 1e-12 * F_.a();
    }

private:
    void check_args(int i, int j, double x, double t) const {
        const auto& r = F_.realization();
        if (i < 0 || j < 0 || i >= r.p() || j >= r.p()) throw DomainError("InverseKernel: index out of range");
        const double tol = r.l * 1e-14;
        if (x < -tol || x > r.l + tol || t < -tol || t > r.l + tol)
            throw DomainError("InverseKernel: arguments outside [0, l]");
    }

    FundamentalSolution F_;
    ComplexMatrix P_;
    ComplexMatrix upper_;
    double rcond_ = 0.0;
};

/// Inverse kernel for the realization's interval, or nullopt when S is singular.
inline std::optional<InverseKernel> make_inverse_kernel(const Realization& r) {
    FundamentalSolution F(r);
    const auto pc = p_cross(F);
    if (!pc.invertible) return std::nullopt;
    return InverseKernel(std::move(F), pc);
}

/// Like make_inverse_kernel but throws SingularOperatorError.
inline InverseKernel require_inverse_kernel(const Realization& r) {
    FundamentalSolution F(r);
    const auto pc = p_cross(F);
    if (!pc.invertible)
        throw SingularOperatorError("S is not invertible on [0, " + std::to_string(r.l) + "]: U_22(a) singular", r.l,
                                    pc.rcond);
    return InverseKernel(std::move(F), pc);
}

/// One element h of Ker S, h_i(x) = e_i [theta2^*, theta1^*] e^{d_i x A} U(d_i x) [0; g].
class KernelFunction {
public:
    KernelFunction(const FundamentalSolution* F, ComplexVector g) : F_(F), g_(std::move(g)) {}

    [[nodiscard]] ComplexVector operator()(double x) const {
        const auto& r = F_->realization();
        const int n = r.n();
        ComplexVector lifted = ComplexVector::Zero(2 * n);
        lifted.tail(n) = g_;
        const ComplexMatrix R = right_factor(r);
        ComplexVector out(r.p());
        for (int i = 0; i < r.p(); ++i) out(i) = (R.row(i) * (F_->V(r.D.d(i) * x) * lifted))(0);
        return out;
    }

    [[nodiscard]] const ComplexVector& seed() const { return g_; }

private:
    const FundamentalSolution* F_;
    ComplexVector g_;
};

/// Basis of Ker S in L^2_p(0, l) coordinates; empty when U_22(a) is invertible.
/// The returned functions reference F, which must outlive them.
inline std::vector<KernelFunction> kernel_basis(const FundamentalSolution& F) {
    const auto pc = p_cross(F);
    std::vector<KernelFunction> out;
    if (pc.invertible) return out;
    for (Eigen::Index c = 0; c < pc.kernel.cols(); ++c) out.emplace_back(&F, pc.kernel.col(c));
    return out;
}

/// Preimage coordinate z / d_j of the rescaling map, or nullopt in the
/// zero-extension region z >= d_j l. j is 0-based.
inline std::optional<double> e_transform_index(const DiagonalStructure& D, double l, int j, double z) {
    if (j < 0 || j >= D.p()) throw DomainError("e_transform_index: component out of range");
    if (z < 0.0 || z > D.max() * l) throw DomainError("e_transform_index: z outside [0, d_1 l]");
    if (z >= D.d(j) * l) return std::nullopt;
    return z / D.d(j);
}

}  // namespace dkinv
