#pragma once

#include <cmath>
#include <utility>

#include "hspoly/basis.hpp"
#include "hspoly/errors.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// Dense symmetric kernel matrix. Produced PSD by every operation below.
using KernelMatrix = Matrix;

/// Dual variables of the kernel ridge problem: (I_n + gamma*K) alpha = Y.
struct DualSolution {
    Vector alpha;
    double gamma = 0.0;
};

/// Linear Gram matrix shifted by one: entries x_t . x_t' + 1.
inline KernelMatrix gram_plus_one(const Matrix& X) {
    if (X.rows() < 1) throw argument_error("gram_plus_one: need at least one sample");
    KernelMatrix K = X * X.transpose();
    K.array() += 1.0;
    return K;
}

/// Entrywise r-th (Hadamard) power. Preserves symmetry and, by the Schur
/// product theorem, positive semidefiniteness.
inline KernelMatrix hadamard_pow(const KernelMatrix& K, int r) {
    if (r < 1) throw argument_error("hadamard_pow: require r >= 1");
    KernelMatrix result = K;
    for (int step = 1; step < r; ++step) result.array() *= K.array();
    return result;
}

namespace detail {

/// Cholesky with diagonal jitter escalation: 1e-12 * trace, x10 up to 1e-6 * trace.
/// I + gamma*K is SPD in exact arithmetic but can be borderline in floats.
inline Eigen::LLT<Matrix> robust_llt(const Matrix& A) {
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) return llt;
    const double trace = A.trace();
    const double scale = trace > 0.0 ? trace : 1.0;
    double jitter = 1e-12 * scale;
    for (; jitter <= 1e-6 * scale; jitter *= 10.0) {
        Matrix jittered = A;
        jittered.diagonal().array() += jitter;
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) return llt;
    }
    throw numerical_error("Cholesky factorization failed", trace, jitter);
}

}  // namespace detail

/// Solve (I_n + gamma*K) alpha = Y by SPD factorization.
inline DualSolution ridge_dual_solve(const KernelMatrix& K, const Vector& Y, double gamma) {
    if (gamma <= 0.0) throw argument_error("ridge_dual_solve: require gamma > 0");
    if (K.rows() != K.cols() || K.rows() != Y.size())
        throw argument_error("ridge_dual_solve: dimension mismatch");
    Matrix A = gamma * K;
    A.diagonal().array() += 1.0;
    DualSolution dual;
    dual.alpha = detail::robust_llt(A).solve(Y);
    dual.gamma = gamma;
    return dual;
}

/// Rank-one micro kernel of a single monomial: m_j(X) m_j(X)^T.
inline KernelMatrix micro_kernel_monomial(const BasisCatalog& catalog, const Matrix& X, int j) {
    const Vector column = catalog.feature_column(X, j);
    return column * column.transpose();
}

/// Input-level micro kernel: sum of K_j over all monomials depending on input i,
/// computed without enumerating them as K_lin^{or} - (K_lin - X_i X_i^T)^{or},
/// where K_lin is the linear Gram-plus-one matrix.
inline KernelMatrix micro_kernel_input(const KernelMatrix& K_lin, const Vector& X_i, int r) {
    if (K_lin.rows() != K_lin.cols() || K_lin.rows() != X_i.size())
        throw argument_error("micro_kernel_input: dimension mismatch");
    const KernelMatrix without = K_lin - X_i * X_i.transpose();
    return hadamard_pow(K_lin, r) - hadamard_pow(without, r);
}

/// Optimal ridge objective as a function of the kernel:
/// c(K_s) = 1/2 Y^T (I_n + gamma*K_s)^{-1} Y, together with the dual solution
/// that achieves it.
inline std::pair<double, DualSolution> loss_c(const Vector& Y, double gamma,
                                              const KernelMatrix& K_s) {
    DualSolution dual = ridge_dual_solve(K_s, Y, gamma);
    const double value = 0.5 * Y.dot(dual.alpha);
    return {value, std::move(dual)};
}

/// Same loss through the primal normal equations on the selected feature
/// columns Z: 1/2 Y^T Y - 1/2 Y^T Z (I/gamma + Z^T Z)^{-1} Z^T Y.
/// Preferred when the support is small relative to n.
inline double loss_c_primal(const Vector& Y, double gamma, const Matrix& Z) {
    if (gamma <= 0.0) throw argument_error("loss_c_primal: require gamma > 0");
    if (Z.cols() == 0) return 0.5 * Y.squaredNorm();
    if (Z.rows() != Y.size()) throw argument_error("loss_c_primal: dimension mismatch");
    Matrix G = Z.transpose() * Z;
    G.diagonal().array() += 1.0 / gamma;
    const Vector rhs = Z.transpose() * Y;
    return 0.5 * (Y.squaredNorm() - rhs.dot(detail::robust_llt(G).solve(rhs)));
}

/// Directional derivative of c along a micro kernel: -(gamma/2) alpha^T K_j alpha.
/// Always <= 0 for PSD K_j.
inline double grad_c(const DualSolution& dual, const KernelMatrix& K_j) {
    return -0.5 * dual.gamma * dual.alpha.dot(K_j * dual.alpha);
}

/// grad_c specialized to a rank-one micro kernel with feature column phi_j:
/// -(gamma/2) (phi_j . alpha)^2, an O(n) inner product.
inline double grad_c_rank1(const DualSolution& dual, const Vector& feature_column) {
    const double inner = feature_column.dot(dual.alpha);
    return -0.5 * dual.gamma * inner * inner;
}

}  // namespace hspoly
