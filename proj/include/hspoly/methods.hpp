#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hspoly/basis.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/lasso.hpp"
#include "hspoly/ranking.hpp"
#include "hspoly/solver.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// Regularization weight from the kernel scale: gamma_scale * n / trace(K^{or}),
/// i.e. gamma_scale over the average kernel diagonal. Used whenever a run asks
/// for gamma = auto.
inline double auto_gamma(const Matrix& X, int r, double gamma_scale = 100.0) {
    double trace = 0.0;
    for (Index t = 0; t < X.rows(); ++t)
        trace += std::pow(1.0 + X.row(t).squaredNorm(), r);
    if (trace <= 0.0) return gamma_scale;
    return gamma_scale * static_cast<double>(X.rows()) / trace;
}

/// A fitted regression model of any supported method, with enough state to
/// predict on new rows.
struct FitModel {
    std::string method;  ///< exact | lasso | kernel-ridge | ridge
    int p = 0;
    int r = 1;
    double gamma = 0.0;

    // Sparse methods: selected monomials of the (p, r) catalog and their
    // coefficients.
    std::vector<int> support;
    Vector coefficients;

    // Kernel methods: dual weights over the stored training rows.
    Matrix X_train;
    Vector alpha;

    // Exact-solver bookkeeping.
    std::optional<SolveDiagnostics> diagnostics;
    // Lasso bookkeeping.
    std::optional<LassoPathPoint> path_point;

    Vector predict(const Matrix& X) const {
        if (X.cols() != p) throw argument_error("predict: input column mismatch");
        if (method == "kernel-ridge" || method == "ridge") {
            KernelMatrix cross = X * X_train.transpose();
            cross.array() += 1.0;
            return gamma * hadamard_pow(cross, r) * alpha;
        }
        const BasisCatalog catalog(p, r);
        Vector predictions = Vector::Zero(X.rows());
        for (std::size_t c = 0; c < support.size(); ++c)
            predictions += catalog.feature_column(X, support[c]) * coefficients[static_cast<Index>(c)];
        return predictions;
    }
};

inline FitModel fit_exact(const BasisCatalog& catalog, const Matrix& X, const Vector& Y, int k,
                          int l, double gamma, const SolveLimits& limits = {}) {
    const SparseFit fit = solve_hierarchical(catalog, X, Y, k, l, gamma, limits);
    FitModel model;
    model.method = "exact";
    model.p = catalog.p();
    model.r = catalog.r();
    model.gamma = gamma;
    model.support = fit.support;
    model.coefficients = fit.coefficients;
    model.diagnostics = fit.diagnostics;
    return model;
}

/// SPORE-style two-step baseline: coordinate descent to a path point whose
/// support size matches the target, then a debiasing ridge refit on the
/// selected columns.
inline FitModel fit_lasso(const BasisCatalog& catalog, const Matrix& X, const Vector& Y,
                          int target_support, double gamma, const LassoOptions& options = {}) {
    const Matrix features = catalog.feature_map(X);
    const LassoPathPoint point = path_to_support(features, Y, gamma, target_support, options);
    FitModel model;
    model.method = "lasso";
    model.p = catalog.p();
    model.r = catalog.r();
    model.gamma = gamma;
    model.support = lasso_support(point.coefficients);
    model.coefficients = debias_refit(features, Y, model.support, gamma);
    model.path_point = point;
    return model;
}

inline FitModel fit_kernel_ridge(const Matrix& X, const Vector& Y, int r, double gamma) {
    const KernelMatrix K = hadamard_pow(gram_plus_one(X), r);
    FitModel model;
    model.method = r == 1 ? "ridge" : "kernel-ridge";
    model.p = static_cast<int>(X.cols());
    model.r = r;
    model.gamma = gamma;
    model.X_train = X;
    model.alpha = ridge_dual_solve(K, Y, gamma).alpha;
    return model;
}

}  // namespace hspoly
