#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "hspoly/errors.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// Per-input relevance scores from the polynomial kernel ranking pass.
/// scores[i] equals the squared Euclidean norm of the kernel-ridge
/// coefficients of all monomials depending on input i.
struct InputRanking {
    Vector scores;           ///< length p, non-negative
    std::vector<int> order;  ///< inputs sorted by score descending, ties by index
    double gamma = 0.0;
    int r = 0;
};

/// Scale-free default regularization weight for the ranking pass:
/// 1 / (n * Var(Y)), falling back to 1 when Y is constant.
inline double default_ranking_gamma(const Vector& Y) {
    const Index n = Y.size();
    if (n == 0) throw argument_error("default_ranking_gamma: empty response");
    const double mean = Y.mean();
    const double variance = (Y.array() - mean).square().sum() / static_cast<double>(n);
    if (variance <= 0.0) return 1.0;
    return 1.0 / (static_cast<double>(n) * variance);
}

/// Rank all p inputs with one kernel ridge solve:
///   alpha = (I + gamma*K^{or})^{-1} Y,   scores[i] = gamma^2 alpha^T K_i alpha,
/// with K_i the input-level micro kernel. Each score costs O(n^2) after the
/// single O(n^3) solve. Pure function of its inputs; scores for distinct i
/// may be evaluated concurrently by callers.
inline InputRanking rank_inputs(const Matrix& X, const Vector& Y, int r, double gamma) {
    if (X.rows() != Y.size()) throw argument_error("rank_inputs: X and Y row mismatch");
    if (X.rows() < 1) throw argument_error("rank_inputs: need at least one sample");
    if (r < 1) throw argument_error("rank_inputs: require r >= 1");
    if (gamma <= 0.0) throw argument_error("rank_inputs: require gamma > 0");

    const int p = static_cast<int>(X.cols());
    const KernelMatrix K_lin = gram_plus_one(X);
    const KernelMatrix K_r = hadamard_pow(K_lin, r);
    const DualSolution dual = ridge_dual_solve(K_r, Y, gamma);

    InputRanking ranking;
    ranking.scores.resize(p);
    ranking.gamma = gamma;
    ranking.r = r;
    for (int i = 0; i < p; ++i) {
        const KernelMatrix without = hadamard_pow(K_lin - X.col(i) * X.col(i).transpose(), r);
        const double quad = dual.alpha.dot((K_r - without) * dual.alpha);
        ranking.scores[i] = gamma * gamma * std::max(quad, 0.0);
    }

    ranking.order.resize(static_cast<std::size_t>(p));
    std::iota(ranking.order.begin(), ranking.order.end(), 0);
    std::stable_sort(ranking.order.begin(), ranking.order.end(), [&](int a, int b) {
        if (ranking.scores[a] != ranking.scores[b]) return ranking.scores[a] > ranking.scores[b];
        return a < b;
    });
    return ranking;
}

/// The p_prime highest-scoring inputs, returned sorted ascending.
inline std::vector<int> select_top(const InputRanking& ranking, int p_prime) {
    const int p = static_cast<int>(ranking.scores.size());
    if (p_prime < 1 || p_prime > p) throw argument_error("select_top: p_prime out of range");
    std::vector<int> selected(ranking.order.begin(), ranking.order.begin() + p_prime);
    std::sort(selected.begin(), selected.end());
    return selected;
}

/// Smallest p_prime such that select_top covers every index in `targets`,
/// i.e. one plus the worst rank position among them.
inline int covering_p_prime(const InputRanking& ranking, const std::vector<int>& targets) {
    int worst = 0;
    for (int t : targets) {
        const auto it = std::find(ranking.order.begin(), ranking.order.end(), t);
        if (it == ranking.order.end()) throw argument_error("covering_p_prime: target not ranked");
        worst = std::max(worst, static_cast<int>(it - ranking.order.begin()) + 1);
    }
    return worst;
}

}  // namespace hspoly
