// Test-only oracles, kept independent of the implementation paths they check:
// brute-force enumeration for counts and exact minima, dense dual-form loss
// via Eigen's LDLT, explicit feature-space ridge for ranking identities.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hspoly/basis.hpp"
#include "hspoly/rng.hpp"

namespace oracles {

using hspoly::BasisCatalog;
using hspoly::Matrix;
using hspoly::Vector;

/// Count exponent vectors with sum <= r by direct recursion.
inline long count_monomials(int p, int r) {
    if (p == 0) return 1;
    long total = 0;
    for (int e = 0; e <= r; ++e) total += count_monomials(p - 1, r - e);
    return total;
}

/// Regression loss through the dual n x n system, factored with LDLT
/// (a different route than the library's Cholesky-with-jitter).
inline double loss_dual_ldlt(const Vector& Y, double gamma, const Matrix& Z) {
    const Eigen::Index n = Y.size();
    Matrix A = Matrix::Identity(n, n) + gamma * (Z * Z.transpose());
    return 0.5 * Y.dot(A.ldlt().solve(Y));
}

/// Loss of a monomial support built column-by-column from the catalog.
inline double loss_of_support(const BasisCatalog& catalog, const Matrix& X, const Vector& Y,
                              double gamma, const std::vector<int>& support) {
    Matrix Z(X.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t c = 0; c < support.size(); ++c)
        Z.col(static_cast<Eigen::Index>(c)) = catalog.feature_column(X, support[c]);
    return loss_dual_ldlt(Y, gamma, Z);
}

struct ExhaustiveResult {
    double objective = 0.0;
    std::vector<int> support;
};

/// Global minimum of the hierarchical (k, l)-sparse loss by enumerating every
/// monomial subset as a bitmask (requires f <= 20).
inline ExhaustiveResult exhaustive_minimum(const BasisCatalog& catalog, const Matrix& X,
                                           const Vector& Y, double gamma, int k, int l) {
    const int f = catalog.f();
    std::vector<unsigned> input_mask(static_cast<std::size_t>(f), 0);
    for (int j = 0; j < f; ++j)
        for (int i : catalog.ancestors(j)) input_mask[static_cast<std::size_t>(j)] |= 1u << i;

    ExhaustiveResult best;
    best.objective = loss_of_support(catalog, X, Y, gamma, {});
    for (unsigned long mask = 1; mask < (1ul << f); ++mask) {
        if (__builtin_popcountl(mask) > l) continue;
        unsigned inputs = 0;
        std::vector<int> support;
        for (int j = 0; j < f; ++j)
            if (mask & (1ul << j)) {
                inputs |= input_mask[static_cast<std::size_t>(j)];
                support.push_back(j);
            }
        if (__builtin_popcount(inputs) > k) continue;
        const double value = loss_of_support(catalog, X, Y, gamma, support);
        if (value < best.objective - 1e-15) {
            best.objective = value;
            best.support = support;
        }
    }
    return best;
}

/// Explicit feature-space ridge coefficients: w = (I/gamma + Phi^T Phi)^{-1} Phi^T Y.
inline Vector explicit_ridge(const Matrix& features, const Vector& Y, double gamma) {
    const Eigen::Index f = features.cols();
    Matrix G = features.transpose() * features + Matrix::Identity(f, f) / gamma;
    return G.ldlt().solve(features.transpose() * Y);
}

inline Matrix random_matrix(hspoly::PhiloxRng& rng, long rows, long cols) {
    Matrix X(rows, cols);
    for (long t = 0; t < rows; ++t)
        for (long c = 0; c < cols; ++c) X(t, c) = rng.normal();
    return X;
}

inline Vector random_vector(hspoly::PhiloxRng& rng, long size) {
    Vector v(size);
    for (long t = 0; t < size; ++t) v[t] = rng.normal();
    return v;
}

}  // namespace oracles
