#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hspoly/data.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/ranking.hpp"
#include "oracles.hpp"

using namespace hspoly;

TEST_CASE("zero response yields zero scores") {
    PhiloxRng rng(20, 0);
    const Matrix X = oracles::random_matrix(rng, 8, 3);
    const InputRanking ranking = rank_inputs(X, Vector::Zero(8), 2, 0.5);
    CHECK(ranking.scores.isZero(1e-20));
    CHECK(ranking.order == std::vector<int>{0, 1, 2});  // tie-break by index
}

TEST_CASE("duplicated input columns receive identical scores") {
    PhiloxRng rng(21, 0);
    Matrix X = oracles::random_matrix(rng, 10, 3);
    X.col(2) = X.col(0);
    const Vector Y = oracles::random_vector(rng, 10);
    const InputRanking ranking = rank_inputs(X, Y, 2, 1.0);
    CHECK(ranking.scores[0] == Catch::Approx(ranking.scores[2]).epsilon(1e-10));
}

TEST_CASE("noise-free quadratic signal ranks its input first") {
    PhiloxRng rng(22, 0);
    const long n = 50;
    const int p = 5;
    const Matrix X = oracles::random_matrix(rng, n, p);
    const Vector Y = X.col(0).array().square();
    const InputRanking ranking = rank_inputs(X, Y, 2, default_ranking_gamma(Y));
    CHECK(ranking.order.front() == 0);

    // Identity against the explicit feature-space ridge coefficients.
    const BasisCatalog catalog(p, 2);
    const Matrix features = catalog.feature_map(X);
    const Vector w = oracles::explicit_ridge(features, Y, ranking.gamma);
    for (int i = 0; i < p; ++i) {
        double expected = 0.0;
        for (int j : catalog.dependents(i)) expected += w[j] * w[j];
        CHECK(ranking.scores[i] == Catch::Approx(expected).margin(1e-8));
    }
}

TEST_CASE("coefficient-norm identity and gradient relation on random instances") {
    PhiloxRng rng(23, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int p = 2 + static_cast<int>(rng.uniform_below(3));
        const int r = 1 + static_cast<int>(rng.uniform_below(3));
        const long n = 5 + static_cast<long>(rng.uniform_below(26));
        const double gamma = std::exp(rng.normal());
        const Matrix X = oracles::random_matrix(rng, n, p);
        const Vector Y = oracles::random_vector(rng, n);
        const InputRanking ranking = rank_inputs(X, Y, r, gamma);

        const BasisCatalog catalog(p, r);
        const Matrix features = catalog.feature_map(X);
        const Vector w = oracles::explicit_ridge(features, Y, gamma);
        const DualSolution dual =
            ridge_dual_solve(hadamard_pow(gram_plus_one(X), r), Y, gamma);

        for (int i = 0; i < p; ++i) {
            double norm_sq = 0.0;
            double grad_sum = 0.0;
            for (int j : catalog.dependents(i)) {
                norm_sq += w[j] * w[j];
                grad_sum += grad_c_rank1(dual, features.col(j));
            }
            const double tol = 1e-8 * std::max(1.0, ranking.scores[i]);
            CHECK(std::abs(ranking.scores[i] - norm_sq) <= tol);
            // Derivatives agree with the coefficient norms up to -2 gamma.
            CHECK(std::abs(ranking.scores[i] - (-2.0 * gamma) * grad_sum) <= tol);
            // Complementarity: w_j = gamma * m_j(X)^T alpha.
            for (int j : catalog.dependents(i))
                CHECK(w[j] == Catch::Approx(gamma * features.col(j).dot(dual.alpha))
                                  .margin(1e-8));
        }
    }
}

TEST_CASE("permuting input columns permutes the scores") {
    PhiloxRng rng(24, 0);
    const Matrix X = oracles::random_matrix(rng, 12, 4);
    const Vector Y = oracles::random_vector(rng, 12);
    const InputRanking base = rank_inputs(X, Y, 2, 1.0);

    const std::vector<int> perm = {2, 0, 3, 1};
    Matrix X_perm(12, 4);
    for (int c = 0; c < 4; ++c) X_perm.col(c) = X.col(perm[static_cast<std::size_t>(c)]);
    const InputRanking permuted = rank_inputs(X_perm, Y, 2, 1.0);
    for (int c = 0; c < 4; ++c)
        CHECK(permuted.scores[c] ==
              Catch::Approx(base.scores[perm[static_cast<std::size_t>(c)]]).epsilon(1e-10));
}

TEST_CASE("select_top basics") {
    InputRanking ranking;
    ranking.scores.resize(3);
    ranking.scores << 3, 1, 2;
    ranking.order = {0, 2, 1};
    CHECK(select_top(ranking, 3) == std::vector<int>{0, 1, 2});
    CHECK(select_top(ranking, 2) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(select_top(ranking, 0), argument_error);
    CHECK_THROWS_AS(select_top(ranking, 4), argument_error);
}

TEST_CASE("top-p' selection covers the true inputs on hierarchical data") {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const SyntheticInstance instance = gen_synthetic(10, 3, 5, 2, 200, 400.0, seed);
        const InputRanking ranking =
            rank_inputs(instance.X, instance.Y, 2, default_ranking_gamma(instance.Y));
        const std::vector<int> selected = select_top(ranking, 6);
        const bool covered = std::includes(selected.begin(), selected.end(),
                                           instance.true_inputs.begin(),
                                           instance.true_inputs.end());
        hits += covered;
    }
    CHECK(hits >= 18);
}

TEST_CASE("covering_p_prime agrees with the brute-force search") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticInstance instance = gen_synthetic(12, 4, 6, 2, 150, 100.0, seed);
        const InputRanking ranking =
            rank_inputs(instance.X, instance.Y, 2, default_ranking_gamma(instance.Y));
        const int direct = covering_p_prime(ranking, instance.true_inputs);
        int smallest = -1;
        for (int p_prime = 1; p_prime <= 12; ++p_prime) {
            const std::vector<int> selected = select_top(ranking, p_prime);
            if (std::includes(selected.begin(), selected.end(), instance.true_inputs.begin(),
                              instance.true_inputs.end())) {
                smallest = p_prime;
                break;
            }
        }
        CHECK(direct == smallest);
    }
}

TEST_CASE("ranking is deterministic") {
    const SyntheticInstance instance = gen_synthetic(6, 2, 3, 2, 60, 50.0, 9);
    const InputRanking a = rank_inputs(instance.X, instance.Y, 2, 0.3);
    const InputRanking b = rank_inputs(instance.X, instance.Y, 2, 0.3);
    CHECK(a.scores == b.scores);
    CHECK(a.order == b.order);
}

TEST_CASE("rank_inputs argument validation") {
    Matrix X(3, 2);
    X.setZero();
    Vector Y(2);
    CHECK_THROWS_AS(rank_inputs(X, Y, 2, 1.0), argument_error);
    Vector Y3 = Vector::Zero(3);
    CHECK_THROWS_AS(rank_inputs(X, Y3, 0, 1.0), argument_error);
    CHECK_THROWS_AS(rank_inputs(X, Y3, 2, 0.0), argument_error);
}
