#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hspoly/errors.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// One point on the l1 regularization path.
struct LassoPathPoint {
    double lambda = 0.0;
    Vector coefficients;   ///< length f, original column scale
    int support_size = 0;  ///< entries above the support threshold
    bool converged = false;
    int sweeps = 0;
};

struct LassoOptions {
    bool standardize = true;  ///< rescale columns to unit Euclidean norm internally
    double tol = 1e-9;        ///< max absolute coordinate change per sweep
    int max_sweeps = 20000;
};

/// Coefficients counted as selected: |w_j| > 1e-6 * max(1, ||w||_inf).
inline std::vector<int> lasso_support(const Vector& coefficients) {
    const double threshold =
        1e-6 * std::max(1.0, coefficients.size() ? coefficients.cwiseAbs().maxCoeff() : 0.0);
    std::vector<int> support;
    for (Index j = 0; j < coefficients.size(); ++j)
        if (std::abs(coefficients[j]) > threshold) support.push_back(static_cast<int>(j));
    return support;
}

/// Smallest lambda shrinking every coefficient to zero (on the working scale).
inline double lasso_lambda_max(const Matrix& Phi, const Vector& Y, bool standardize = true) {
    double lambda = 0.0;
    for (Index j = 0; j < Phi.cols(); ++j) {
        const double norm = Phi.col(j).norm();
        if (norm == 0.0) continue;
        const double inner = std::abs(Phi.col(j).dot(Y));
        lambda = std::max(lambda, standardize ? inner / norm : inner);
    }
    return lambda;
}

/// Cyclic coordinate descent for
///   1/2 ||Y - Phi w||^2 + 1/(2 gamma) ||w||^2 + lambda ||w||_1
/// with soft-thresholding updates. The objective is non-increasing every
/// sweep; convergence is declared when the largest coordinate change in a
/// sweep drops below tol. Zero-norm columns keep a zero coefficient.
inline LassoPathPoint fit_elastic_net(const Matrix& Phi, const Vector& Y, double lambda,
                                      double gamma, const LassoOptions& options = {},
                                      const Vector* warm_start = nullptr) {
    if (lambda < 0.0) throw argument_error("fit_elastic_net: require lambda >= 0");
    if (gamma <= 0.0) throw argument_error("fit_elastic_net: require gamma > 0");
    if (Phi.rows() != Y.size()) throw argument_error("fit_elastic_net: Phi/Y row mismatch");

    const Index f = Phi.cols();
    Vector column_scale = Vector::Ones(f);
    if (options.standardize)
        for (Index j = 0; j < f; ++j) {
            const double norm = Phi.col(j).norm();
            if (norm > 0.0) column_scale[j] = norm;
        }

    // Work on w~ = scale .* w so every active column has unit norm.
    Vector w = Vector::Zero(f);
    if (warm_start && warm_start->size() == f)
        w = warm_start->cwiseProduct(column_scale);

    Vector column_sq(f);
    std::vector<bool> active(static_cast<std::size_t>(f), true);
    for (Index j = 0; j < f; ++j) {
        const double norm_sq = Phi.col(j).squaredNorm() / (column_scale[j] * column_scale[j]);
        column_sq[j] = norm_sq;
        if (norm_sq == 0.0) {
            active[static_cast<std::size_t>(j)] = false;
            w[j] = 0.0;
        }
    }

    Vector residual = Y;
    for (Index j = 0; j < f; ++j)
        if (w[j] != 0.0) residual -= Phi.col(j) * (w[j] / column_scale[j]);

    LassoPathPoint point;
    point.lambda = lambda;
    const double inv_gamma = 1.0 / gamma;
    int sweep = 0;
    for (; sweep < options.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < f; ++j) {
            if (!active[static_cast<std::size_t>(j)]) continue;
            const double old = w[j];
            const double rho = Phi.col(j).dot(residual) / column_scale[j] + column_sq[j] * old;
            const double shrunk = std::abs(rho) <= lambda
                                      ? 0.0
                                      : (rho > 0.0 ? rho - lambda : rho + lambda);
            const double updated = shrunk / (column_sq[j] + inv_gamma);
            if (updated != old) {
                residual -= Phi.col(j) * ((updated - old) / column_scale[j]);
                w[j] = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        if (max_change < options.tol) {
            point.converged = true;
            ++sweep;
            break;
        }
    }
    point.sweeps = sweep;
    point.coefficients = w.cwiseQuotient(column_scale);
    point.support_size = static_cast<int>(lasso_support(point.coefficients).size());
    return point;
}

/// Largest violation of the coordinate-wise optimality conditions, on the
/// working (standardized) scale. Zero at an exact stationary point.
inline double lasso_kkt_residual(const Matrix& Phi, const Vector& Y, double lambda, double gamma,
                                 const Vector& coefficients, bool standardize = true) {
    const Index f = Phi.cols();
    Vector residual = Y - Phi * coefficients;
    double worst = 0.0;
    for (Index j = 0; j < f; ++j) {
        double scale = 1.0;
        if (standardize) {
            const double norm = Phi.col(j).norm();
            if (norm == 0.0) continue;
            scale = norm;
        } else if (Phi.col(j).norm() == 0.0) {
            continue;
        }
        const double w_scaled = coefficients[j] * scale;
        const double grad = Phi.col(j).dot(residual) / scale - w_scaled / gamma;
        if (w_scaled != 0.0)
            worst = std::max(worst, std::abs(grad - lambda * (w_scaled > 0.0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::max(0.0, std::abs(grad) - lambda));
    }
    return worst;
}

/// Bisection over lambda returning the computed path point whose support size
/// is closest to the requested target (preferring sizes <= target on ties).
inline LassoPathPoint path_to_support(const Matrix& Phi, const Vector& Y, double gamma,
                                      int target_support, const LassoOptions& options = {},
                                      int max_bisections = 60) {
    const int f = static_cast<int>(Phi.cols());
    if (target_support < 0 || target_support > f)
        throw argument_error("path_to_support: target support out of range");

    const auto better = [&](const LassoPathPoint& a, const LassoPathPoint& b) {
        const int da = std::abs(a.support_size - target_support);
        const int db = std::abs(b.support_size - target_support);
        if (da != db) return da < db;
        const bool a_under = a.support_size <= target_support;
        const bool b_under = b.support_size <= target_support;
        if (a_under != b_under) return a_under;
        return a.lambda > b.lambda;
    };

    const double lambda_hi = lasso_lambda_max(Phi, Y, options.standardize) * (1.0 + 1e-10);
    LassoPathPoint best = fit_elastic_net(Phi, Y, lambda_hi, gamma, options);
    if (target_support == 0) return best;

    LassoPathPoint at_zero = fit_elastic_net(Phi, Y, 0.0, gamma, options, &best.coefficients);
    if (better(at_zero, best)) best = at_zero;
    if (at_zero.support_size <= target_support) return at_zero;

    double lo = 0.0, hi = lambda_hi;
    Vector warm = at_zero.coefficients;
    for (int iter = 0; iter < max_bisections; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const LassoPathPoint point = fit_elastic_net(Phi, Y, mid, gamma, options, &warm);
        warm = point.coefficients;
        if (better(point, best)) best = point;
        if (point.support_size == target_support) break;
        if (point.support_size > target_support)
            lo = mid;
        else
            hi = mid;
    }
    return best;
}

/// Debiasing ridge refit on the selected columns; an empty support yields the
/// zero model.
inline Vector debias_refit(const Matrix& Phi, const Vector& Y, const std::vector<int>& support,
                           double gamma) {
    if (gamma <= 0.0) throw argument_error("debias_refit: require gamma > 0");
    const Index m = static_cast<Index>(support.size());
    if (m == 0) return Vector();
    Matrix Z(Phi.rows(), m);
    for (Index c = 0; c < m; ++c) {
        const int j = support[static_cast<std::size_t>(c)];
        if (j < 0 || j >= Phi.cols()) throw argument_error("debias_refit: support index out of range");
        Z.col(c) = Phi.col(j);
    }
    Matrix G = Z.transpose() * Z;
    G.diagonal().array() += 1.0 / gamma;
    return detail::robust_llt(G).solve(Z.transpose() * Y);
}

}  // namespace hspoly
