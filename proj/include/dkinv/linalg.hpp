#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkinv {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a linear system is numerically singular. Carries the
/// reciprocal condition estimate that triggered the rejection.
class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, double rcond)
        : std::runtime_error(what + " (rcond=" + std::to_string(rcond) + ")"), rcond_(rcond) {}

    [[nodiscard]] double rcond() const noexcept { return rcond_; }

private:
    double rcond_;
};

inline constexpr double kSingularRcond = 1e-12;

inline double frobenius(const ComplexMatrix& m) { return m.norm(); }

inline bool all_finite(const ComplexMatrix& m) {
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        const cplx z = m.data()[k];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

inline void require_square(const ComplexMatrix& m, const char* who) {
    if (m.rows() != m.cols())
        throw DimensionError(std::string(who) + ": expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
}

inline ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

inline ComplexMatrix hstack(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("hstack: row mismatch");
    ComplexMatrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

inline ComplexMatrix vstack(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.cols()) throw DimensionError("vstack: column mismatch");
    ComplexMatrix out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

inline ComplexMatrix block_diag(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out = ComplexMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

namespace detail {

inline double one_norm(const ComplexMatrix& m) {
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Pade approximant r_m(A) = q_m(A)^{-1} p_m(A), with p_m(-A) = q_m(A).
inline ComplexMatrix pade_low(const ComplexMatrix& A, const std::vector<double>& b) {
    const auto n = A.rows();
    const ComplexMatrix A2 = A * A;
    ComplexMatrix Apow = identity(n);
    ComplexMatrix U_even = ComplexMatrix::Zero(n, n);
    ComplexMatrix V_even = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k + 1 < b.size(); k += 2) {
        V_even += b[k] * Apow;
        U_even += b[k + 1] * Apow;
        Apow = Apow * A2;
    }
    const ComplexMatrix U = A * U_even;
    const ComplexMatrix P = V_even + U;
    const ComplexMatrix Q = V_even - U;
    return Q.partialPivLu().solve(P);
}

inline ComplexMatrix pade13(const ComplexMatrix& A) {
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    const auto n = A.rows();
    const ComplexMatrix Id = identity(n);
    const ComplexMatrix A2 = A * A;
    const ComplexMatrix A4 = A2 * A2;
    const ComplexMatrix A6 = A4 * A2;
    const ComplexMatrix U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * Id);
    const ComplexMatrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * Id;
    return (V - U).partialPivLu().solve(V + U);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring around a diagonal Pade
/// approximant of degree 3..13, selected from the 1-norm of M.
inline ComplexMatrix mat_exp(const ComplexMatrix& M) {
    require_square(M, "mat_exp");
    if (M.size() == 0) return M;
    if (!all_finite(M)) throw DomainError("mat_exp: non-finite input");

    const double norm = detail::one_norm(M);
    if (norm == 0.0) return identity(M.rows());
    if (norm <= 1.495585217958292e-2) return detail::pade_low(M, {120.0, 60.0, 12.0, 1.0});
    if (norm <= 2.539398330063230e-1)
        return detail::pade_low(M, {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0});
    if (norm <= 9.504178996162932e-1)
        return detail::pade_low(M, {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0});
    if (norm <= 2.097847961257068)
        return detail::pade_low(M, {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0,
                                    110880.0, 3960.0, 90.0, 1.0});

    constexpr double theta13 = 5.371920351148152;
    int s = 0;
    if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    ComplexMatrix R = detail::pade13(M / std::ldexp(1.0, s));
    for (int k = 0; k < s; ++k) R = R * R;
    return R;
}

/// Eigenvalues with multiplicity, in no particular order.
inline std::vector<cplx> eig_spectrum(const ComplexMatrix& M) {
    require_square(M, "eig_spectrum");
    if (M.size() == 0) return {};
    Eigen::ComplexEigenSolver<ComplexMatrix> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eig_spectrum: QR iteration did not converge");
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

/// 2-norm reciprocal condition number from singular values; 0 for singular.
inline double rcond_svd(const ComplexMatrix& M) {
    if (M.size() == 0) return 1.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(M);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax == 0.0) return 0.0;
    return sv(sv.size() - 1) / smax;
}

/// Solves M X = RHS by LU; rejects M whose reciprocal condition estimate is
/// below kSingularRcond.
inline ComplexMatrix solve(const ComplexMatrix& M, const ComplexMatrix& rhs) {
    require_square(M, "solve");
    if (M.rows() != rhs.rows()) throw DimensionError("solve: right-hand side row mismatch");
    if (M.size() == 0) return rhs;
    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    double rc = lu.rcond();
    if (std::isnan(rc)) rc = 0.0;
    if (!(rc >= kSingularRcond)) throw SingularMatrixError("solve: matrix is singular to working tolerance", rc);
    return lu.solve(rhs);
}

inline ComplexMatrix inverse(const ComplexMatrix& M) { return solve(M, identity(M.rows())); }

/// Orthonormal basis (as columns) of the numerical null space of M:
/// right singular vectors whose singular value is at most rel_tol * sigma_max.
/// The vector belonging to the smallest singular value is always included
/// when M is square and rank deficient by at least that measure.
inline ComplexMatrix null_space(const ComplexMatrix& M, double rel_tol) {
    Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const auto cols = M.cols();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > rel_tol * smax) ++rank;
    return svd.matrixV().rightCols(cols - rank);
}

/// Inverse square root of a Hermitian positive definite matrix.
inline ComplexMatrix hermitian_inv_sqrt(const ComplexMatrix& H) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H);
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.size() > 0 && !(ev.minCoeff() > 0.0))
        throw DomainError("hermitian_inv_sqrt: matrix is not positive definite");
    return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

inline double min_hermitian_eigenvalue(const ComplexMatrix& H) {
    const ComplexMatrix sym = 0.5 * (H + H.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace dkinv
