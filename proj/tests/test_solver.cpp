#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "hspoly/solver.hpp"
#include "oracles.hpp"

using namespace hspoly;

namespace {

SparsityPattern all_zero_pattern(const BasisCatalog& catalog) {
    SparsityPattern pattern;
    pattern.s.assign(static_cast<std::size_t>(catalog.f()), 0);
    pattern.h.assign(static_cast<std::size_t>(catalog.p()), 0);
    return pattern;
}

}  // namespace

TEST_CASE("evaluate_cut at the empty pattern") {
    PhiloxRng rng(30, 0);
    const BasisCatalog catalog(2, 2);
    const Matrix X = oracles::random_matrix(rng, 5, 2);
    const Vector Y = oracles::random_vector(rng, 5);
    const double gamma = 0.9;
    const Matrix features = catalog.feature_map(X);

    const Cut cut = evaluate_cut(catalog, X, Y, gamma, all_zero_pattern(catalog));
    CHECK(cut.value_at_anchor == Catch::Approx(0.5 * Y.squaredNorm()));
    for (int j = 0; j < catalog.f(); ++j) {
        const double inner = features.col(j).dot(Y);
        CHECK(cut.gradient[j] == Catch::Approx(-0.5 * gamma * inner * inner).margin(1e-12));
    }

    const Cut zero_cut = evaluate_cut(catalog, X, Vector::Zero(5), gamma, all_zero_pattern(catalog));
    CHECK(zero_cut.value_at_anchor == 0.0);
    CHECK(zero_cut.gradient.isZero(1e-20));
}

TEST_CASE("evaluate_cut rejects hierarchy-violating patterns") {
    const BasisCatalog catalog(2, 2);
    Matrix X = Matrix::Ones(3, 2);
    Vector Y = Vector::Ones(3);
    SparsityPattern pattern = all_zero_pattern(catalog);
    pattern.s[static_cast<std::size_t>(catalog.index_of({1, 1}))] = 1;  // needs h = {1, 1}
    CHECK_THROWS_AS(evaluate_cut(catalog, X, Y, 1.0, pattern), argument_error);
}

TEST_CASE("cuts minorize the loss at every binary point") {
    PhiloxRng rng(31, 0);
    const BasisCatalog catalog(2, 2);  // f = 6
    const long n = 4;
    const Matrix X = oracles::random_matrix(rng, n, 2);
    const Vector Y = oracles::random_vector(rng, n);
    const double gamma = 1.7;

    // Anchor at a random feasible pattern.
    SparsityPattern anchor = pattern_from_support(catalog, {1, 3});
    const Cut cut = evaluate_cut(catalog, X, Y, gamma, anchor);

    const int f = catalog.f();
    for (unsigned mask = 0; mask < (1u << f); ++mask) {
        std::vector<int> support;
        std::vector<std::uint8_t> s(static_cast<std::size_t>(f), 0);
        for (int j = 0; j < f; ++j)
            if (mask & (1u << j)) {
                support.push_back(j);
                s[static_cast<std::size_t>(j)] = 1;
            }
        const double value = oracles::loss_of_support(catalog, X, Y, gamma, support);
        CHECK(cut.value_at(s) <= value + 1e-8);
        CHECK(cut.value_at(s) == Catch::Approx(cut.value_at_support(support)).margin(1e-12));
    }
}

TEST_CASE("master_lower_bound base cases") {
    const BasisCatalog catalog(3, 2);
    const int f = catalog.f();
    const std::vector<std::int8_t> all_free_h(3, -1);
    const std::vector<std::int8_t> all_free_s(static_cast<std::size_t>(f), -1);

    // No cuts: eta >= 0 gives bound 0.
    CHECK(master_lower_bound({}, catalog, all_free_h, all_free_s, 2, 3).value() == 0.0);

    // Single cut, unconstrained completion: anchor value plus all negative terms.
    Cut cut;
    cut.anchor.assign(static_cast<std::size_t>(f), 0);
    cut.value_at_anchor = 5.0;
    cut.offset = 5.0;
    cut.gradient = Vector::Zero(f);
    cut.gradient[2] = -1.0;
    cut.gradient[5] = -0.5;
    cut.gradient[7] = -2.0;

    const double unconstrained =
        master_lower_bound({cut}, catalog, all_free_h, all_free_s, 3, f).value();
    CHECK(unconstrained == Catch::Approx(5.0 - 3.5));

    // l = 2 admits only the two most negative terms.
    const double two_terms =
        master_lower_bound({cut}, catalog, all_free_h, all_free_s, 3, 2).value();
    CHECK(two_terms == Catch::Approx(5.0 - 3.0));

    // Inconsistent partial assignment: monomial fixed on, ancestor fixed off.
    std::vector<std::int8_t> h_state(3, -1);
    std::vector<std::int8_t> s_state(static_cast<std::size_t>(f), -1);
    h_state[0] = 0;
    s_state[static_cast<std::size_t>(catalog.index_of({1, 1, 0}))] = 1;
    CHECK_FALSE(master_lower_bound({cut}, catalog, h_state, s_state, 3, 3).has_value());
}

TEST_CASE("master_lower_bound never exceeds the true completion minimum") {
    PhiloxRng rng(32, 0);
    const BasisCatalog catalog(3, 2);  // f = 10 <= 12
    const int f = catalog.f();
    const long n = 6;
    const Matrix X = oracles::random_matrix(rng, n, 3);
    const Vector Y = oracles::random_vector(rng, n);
    const double gamma = 1.1;

    std::vector<Cut> cuts;
    cuts.push_back(evaluate_cut(catalog, X, Y, gamma, all_zero_pattern(catalog)));
    cuts.push_back(evaluate_cut(catalog, X, Y, gamma, pattern_from_support(catalog, {2, 4})));

    for (int trial = 0; trial < 30; ++trial) {
        const int k = 1 + static_cast<int>(rng.uniform_below(3));
        const int l = 1 + static_cast<int>(rng.uniform_below(4));
        // Random partial assignment.
        std::vector<std::int8_t> h_state(3);
        std::vector<std::int8_t> s_state(static_cast<std::size_t>(f));
        for (auto& v : h_state) v = static_cast<std::int8_t>(rng.uniform_below(3)) - 1;
        for (auto& v : s_state) v = -1;  // keep monomials free so completions exist

        const auto bound = master_lower_bound(cuts, catalog, h_state, s_state, k, l);

        // Enumerate all completions consistent with the assignment.
        double best = std::numeric_limits<double>::infinity();
        bool any = false;
        for (unsigned mask = 0; mask < (1u << f); ++mask) {
            std::vector<std::uint8_t> s(static_cast<std::size_t>(f), 0);
            int count = 0;
            for (int j = 0; j < f; ++j)
                if (mask & (1u << j)) {
                    s[static_cast<std::size_t>(j)] = 1;
                    ++count;
                }
            if (count > l) continue;
            bool consistent = true;
            for (int j = 0; j < f && consistent; ++j) {
                if (s_state[static_cast<std::size_t>(j)] >= 0 &&
                    s_state[static_cast<std::size_t>(j)] != s[static_cast<std::size_t>(j)])
                    consistent = false;
            }
            if (!consistent) continue;
            // Inputs: union of fixed-on inputs and ancestors of the selection.
            std::vector<std::uint8_t> h = minimal_inputs(catalog, s);
            for (int i = 0; i < 3; ++i) {
                if (h_state[static_cast<std::size_t>(i)] == 1) h[static_cast<std::size_t>(i)] = 1;
                if (h_state[static_cast<std::size_t>(i)] == 0 && h[static_cast<std::size_t>(i)]) {
                    consistent = false;
                }
            }
            if (!consistent) continue;
            int h_count = 0;
            for (auto v : h) h_count += v;
            if (h_count > k) continue;
            any = true;
            double master = 0.0;
            for (const Cut& cut : cuts) master = std::max(master, cut.value_at(s));
            best = std::min(best, master);
        }
        if (any) {
            REQUIRE(bound.has_value());
            CHECK(bound.value() <= best + 1e-9);
        }
    }
}

TEST_CASE("recover_coefficients examples") {
    PhiloxRng rng(33, 0);
    const BasisCatalog catalog(2, 2);
    const Matrix X = oracles::random_matrix(rng, 6, 2);
    const Vector Y = oracles::random_vector(rng, 6);

    CHECK(recover_coefficients(catalog, X, Y, {}, 1.0).size() == 0);

    // Single constant monomial: scalar ridge w = gamma * sum(y) / (1 + gamma * n).
    const double gamma = 0.7;
    const Vector w = recover_coefficients(catalog, X, Y, {0}, gamma);
    CHECK(w[0] == Catch::Approx(gamma * Y.sum() / (1.0 + gamma * 6)).epsilon(1e-12));

    // Large gamma approaches the least squares solution on a well-posed support.
    const std::vector<int> support = {0, 1, 2};
    Matrix Z(6, 3);
    for (int c = 0; c < 3; ++c) Z.col(c) = catalog.feature_column(X, support[static_cast<std::size_t>(c)]);
    const Vector ols = (Z.transpose() * Z).ldlt().solve(Z.transpose() * Y);
    const Vector ridge = recover_coefficients(catalog, X, Y, support, 1e10);
    CHECK((ridge - ols).norm() < 1e-6 * std::max(1.0, ols.norm()));

    // Normal-equation residual invariant.
    const Vector w2 = recover_coefficients(catalog, X, Y, support, gamma);
    const Vector residual =
        (Z.transpose() * Z + Matrix::Identity(3, 3) / gamma) * w2 - Z.transpose() * Y;
    CHECK(residual.norm() <= 1e-8 * std::max(1.0, Y.norm()));
}

TEST_CASE("vacuous budgets reproduce the unconstrained kernel ridge") {
    PhiloxRng rng(34, 0);
    const BasisCatalog catalog(2, 2);
    const Matrix X = oracles::random_matrix(rng, 8, 2);
    const Vector Y = oracles::random_vector(rng, 8);
    const double gamma = 0.6;

    const SparseFit fit = solve_hierarchical(catalog, X, Y, 2, catalog.f(), gamma);
    const double full = oracles::loss_of_support(catalog, X, Y, gamma, [&] {
        std::vector<int> all(static_cast<std::size_t>(catalog.f()));
        std::iota(all.begin(), all.end(), 0);
        return all;
    }());
    CHECK(fit.objective <= full + 1e-8);
    CHECK(fit.diagnostics.termination == Termination::converged);
}

TEST_CASE("noiseless single-monomial signal is recovered with l = 1") {
    PhiloxRng rng(35, 0);
    const BasisCatalog catalog(2, 2);
    const Matrix X = oracles::random_matrix(rng, 12, 2);
    const int target = catalog.index_of({1, 1});
    const Vector Y = catalog.feature_column(X, target);

    const SparseFit fit = solve_hierarchical(catalog, X, Y, 2, 1, 1e5);
    REQUIRE(fit.support.size() == 1);
    CHECK(fit.support[0] == target);
    CHECK(fit.diagnostics.termination == Termination::converged);
    // Exhaustive cross-check.
    const auto oracle = oracles::exhaustive_minimum(catalog, X, Y, 1e5, 2, 1);
    CHECK(fit.objective == Catch::Approx(oracle.objective).margin(1e-8));
}

TEST_CASE("solver equals exhaustive enumeration on random instances") {
    PhiloxRng rng(36, 0);
    const std::vector<std::pair<int, int>> dims = {{2, 2}, {3, 2}, {4, 2}, {2, 3}};
    for (int trial = 0; trial < 12; ++trial) {
        const auto [p, r] = dims[trial % dims.size()];
        const BasisCatalog catalog(p, r);
        const long n = 5 + static_cast<long>(rng.uniform_below(10));
        const Matrix X = oracles::random_matrix(rng, n, p);
        const Vector Y = oracles::random_vector(rng, n);
        const double gamma = std::exp(rng.normal());
        const int k = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(p)));
        const int l = 1 + static_cast<int>(rng.uniform_below(5));

        const SparseFit fit = solve_hierarchical(catalog, X, Y, k, l, gamma);
        const auto oracle = oracles::exhaustive_minimum(catalog, X, Y, gamma, k, l);
        CHECK(fit.objective <= oracle.objective + 1e-8 * std::max(1.0, oracle.objective));
        CHECK(fit.objective >= oracle.objective - 1e-8 * std::max(1.0, oracle.objective));

        // Returned pattern satisfies every invariant.
        CHECK(pattern_is_feasible(catalog, fit.pattern, k, l));
        CHECK(fit.diagnostics.evaluations == fit.diagnostics.cuts);

        // Objective consistency with a direct evaluation of the pattern.
        const double direct = oracles::loss_of_support(catalog, X, Y, gamma, fit.support);
        CHECK(fit.objective == Catch::Approx(direct).margin(1e-8 * std::max(1.0, direct)));
    }
}

TEST_CASE("incumbent history never increases, bound history never decreases") {
    PhiloxRng rng(37, 0);
    const BasisCatalog catalog(3, 2);
    const Matrix X = oracles::random_matrix(rng, 20, 3);
    const Vector Y = oracles::random_vector(rng, 20);
    const SparseFit fit = solve_hierarchical(catalog, X, Y, 2, 3, 1.0);
    const auto& incumbents = fit.diagnostics.incumbent_history;
    for (std::size_t i = 1; i < incumbents.size(); ++i)
        CHECK(incumbents[i] <= incumbents[i - 1]);
    const auto& bounds = fit.diagnostics.bound_history;
    for (std::size_t i = 1; i < bounds.size(); ++i) CHECK(bounds[i] >= bounds[i - 1]);
    if (!incumbents.empty() && !bounds.empty())
        CHECK(bounds.back() <= incumbents.back() + 1e-12);
}

TEST_CASE("limits terminate the solve with an honest status") {
    PhiloxRng rng(38, 0);
    const BasisCatalog catalog(10, 2);  // f = 66
    const Matrix X = oracles::random_matrix(rng, 40, 10);
    const Vector Y = oracles::random_vector(rng, 40);

    SolveLimits limits;
    limits.node_limit = 5;
    const SparseFit fit = solve_hierarchical(catalog, X, Y, 10, 8, 10.0, limits);
    CHECK((fit.diagnostics.termination == Termination::node_limit ||
           fit.diagnostics.termination == Termination::converged));
    if (fit.diagnostics.termination == Termination::node_limit) {
        CHECK(fit.diagnostics.nodes <= 5);
        CHECK(fit.diagnostics.gap >= 0.0);
    }
    CHECK(pattern_is_feasible(catalog, fit.pattern, 10, 8));

    SolveLimits timed;
    timed.time_limit_seconds = 1e-6;
    const SparseFit quick = solve_hierarchical(catalog, X, Y, 10, 8, 10.0, timed);
    CHECK((quick.diagnostics.termination == Termination::time_limit ||
           quick.diagnostics.termination == Termination::converged));
}

TEST_CASE("solver argument validation") {
    const BasisCatalog catalog(2, 2);
    const Matrix X = Matrix::Ones(4, 2);
    const Vector Y = Vector::Ones(4);
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 0, 1, 1.0), argument_error);
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 3, 1, 1.0), argument_error);
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 2, 0, 1.0), argument_error);
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 2, 7, 1.0), argument_error);
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 2, 1, 0.0), argument_error);
    SolveLimits bad;
    bad.time_limit_seconds = 0.0;
    CHECK_THROWS_AS(solve_hierarchical(catalog, X, Y, 2, 1, 1.0, bad), argument_error);
}

TEST_CASE("zero response returns the empty model") {
    const BasisCatalog catalog(2, 2);
    const Matrix X = Matrix::Random(5, 2);
    const SparseFit fit = solve_hierarchical(catalog, X, Vector::Zero(5), 2, 3, 1.0);
    CHECK(fit.support.empty());
    CHECK(fit.objective == 0.0);
    CHECK(fit.diagnostics.termination == Termination::converged);
}

TEST_CASE("diagnostics CSV row matches the documented schema") {
    SolveDiagnostics diag;
    diag.n = 10;
    diag.p = 3;
    diag.f = 10;
    diag.k = 2;
    diag.l = 3;
    diag.gamma = 0.5;
    diag.cuts = 7;
    diag.nodes = 12;
    diag.wall_seconds = 0.25;
    diag.objective = 1.5;
    diag.gap = 0.0;
    const std::string header = diagnostics_csv_header();
    const std::string row = diagnostics_csv_row(diag);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    CHECK(row.find("converged") != std::string::npos);
}
