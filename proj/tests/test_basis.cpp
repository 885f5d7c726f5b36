#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hspoly/basis.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/rng.hpp"
#include "oracles.hpp"

using namespace hspoly;

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

TEST_CASE("basis size matches binomial(p+r, r)") {
    CHECK(BasisCatalog(3, 2).f() == 10);
    CHECK(BasisCatalog(1, 1).f() == 2);
    CHECK(BasisCatalog(5, 3).f() == 56);
    for (int p = 1; p <= 6; ++p)
        for (int r = 1; r <= 4; ++r)
            CHECK(static_cast<long>(BasisCatalog(p, r).f()) == oracles::count_monomials(p, r));
}

TEST_CASE("basis size overflow raises a capacity error") {
    CHECK_THROWS_AS(basis_size(1000, 40), capacity_error);
    CHECK_THROWS_AS(enumerate_basis(100, 100), capacity_error);
    CHECK_THROWS_AS(basis_size(0, 2), argument_error);
    CHECK_THROWS_AS(basis_size(2, 0), argument_error);
}

TEST_CASE("graded lexicographic order and scalings match the worked p=3 r=2 table") {
    const BasisCatalog catalog(3, 2);
    const std::vector<std::vector<int>> expected_exponents = {
        {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0},
        {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
    const std::vector<double> expected_scaling = {1, kSqrt2, kSqrt2, kSqrt2, 1,
                                                  kSqrt2, kSqrt2, 1, kSqrt2, 1};
    REQUIRE(catalog.f() == 10);
    for (int j = 0; j < 10; ++j) {
        CHECK(catalog.monomial(j).exponents == expected_exponents[static_cast<std::size_t>(j)]);
        CHECK(catalog.scaling(j) ==
              Catch::Approx(expected_scaling[static_cast<std::size_t>(j)]).epsilon(1e-14));
        CHECK(catalog.index_of(expected_exponents[static_cast<std::size_t>(j)]) == j);
    }
    CHECK(catalog.index_of({9, 9, 9}) == -1);
}

TEST_CASE("dependents match the worked example") {
    const BasisCatalog catalog(3, 2);
    // D(1) = {2, 5, 6, 7} in the paper's 1-based table.
    CHECK(catalog.dependents(0) == std::vector<int>{1, 4, 5, 6});

    // The constant monomial never appears in any dependent set.
    for (int i = 0; i < 3; ++i)
        for (int j : catalog.dependents(i)) CHECK(j != 0);

    // p=2, r=2, input 2: {x2, x1*x2, x2^2} by position.
    const BasisCatalog two(2, 2);
    std::vector<int> expected;
    for (int j = 0; j < two.f(); ++j)
        if (two.monomial(j).exponents[1] >= 1) expected.push_back(j);
    CHECK(two.dependents(1) == expected);
    CHECK(two.dependents(1) == std::vector<int>{2, 4, 5});

    CHECK_THROWS_AS(catalog.dependents(-1), argument_error);
    CHECK_THROWS_AS(catalog.dependents(3), argument_error);
}

TEST_CASE("ancestors are multisets with multiplicity") {
    const BasisCatalog catalog(3, 2);
    const int j_x1x3 = catalog.index_of({1, 0, 1});
    CHECK(catalog.ancestors(j_x1x3) == std::vector<int>{0, 2});  // A(7) = {1, 3}
    const int j_x1sq = catalog.index_of({2, 0, 0});
    CHECK(catalog.ancestors(j_x1sq) == std::vector<int>{0, 0});
    CHECK(catalog.ancestors(0).empty());
    CHECK_THROWS_AS(catalog.ancestors(10), argument_error);
}

TEST_CASE("feature_map worked examples") {
    const BasisCatalog catalog(3, 2);
    Matrix X(1, 3);
    X << 1, 1, 1;
    const Matrix features = catalog.feature_map(X);
    for (int j = 0; j < 10; ++j)
        CHECK(features(0, j) == Catch::Approx(catalog.scaling(j)).epsilon(1e-14));

    Matrix zeros = Matrix::Zero(4, 3);
    const Matrix zero_features = catalog.feature_map(zeros);
    CHECK(zero_features.col(0).isOnes());
    CHECK(zero_features.rightCols(9).isZero());

    const BasisCatalog two(2, 2);
    Matrix x(1, 2);
    x << 2, 3;
    const Matrix row = two.feature_map(x);
    const std::vector<double> expected = {1, 2 * kSqrt2, 3 * kSqrt2, 4, 6 * kSqrt2, 9};
    for (int j = 0; j < 6; ++j)
        CHECK(row(0, j) == Catch::Approx(expected[static_cast<std::size_t>(j)]).epsilon(1e-14));

    Matrix wrong(2, 4);
    CHECK_THROWS_AS(catalog.feature_map(wrong), argument_error);
    CHECK_THROWS_AS(catalog.feature_column(wrong, 0), argument_error);
}

TEST_CASE("kernel consistency: feature map outer product equals the Hadamard power") {
    PhiloxRng rng(101, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const int p = 1 + static_cast<int>(rng.uniform_below(4));
        const int r = 1 + static_cast<int>(rng.uniform_below(3));
        const long n = 1 + static_cast<long>(rng.uniform_below(6));
        const BasisCatalog catalog(p, r);
        const Matrix X = oracles::random_matrix(rng, n, p);
        const Matrix features = catalog.feature_map(X);
        const Matrix direct = features * features.transpose();
        const Matrix kernel = hadamard_pow(gram_plus_one(X), r);
        CHECK((direct - kernel).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dependent sets partition the kernel sum") {
    PhiloxRng rng(202, 0);
    const BasisCatalog catalog(3, 3);
    const Matrix X = oracles::random_matrix(rng, 5, 3);
    const Matrix features = catalog.feature_map(X);
    const Matrix full = hadamard_pow(gram_plus_one(X), 3);
    for (int i = 0; i < 3; ++i) {
        Matrix in_part = Matrix::Zero(5, 5);
        Matrix out_part = Matrix::Zero(5, 5);
        const auto& dep = catalog.dependents(i);
        for (int j = 0; j < catalog.f(); ++j) {
            const Matrix contribution = features.col(j) * features.col(j).transpose();
            if (std::find(dep.begin(), dep.end(), j) != dep.end())
                in_part += contribution;
            else
                out_part += contribution;
        }
        CHECK((in_part + out_part - full).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("monomial count per degree equals binomial(p+d-1, d)") {
    for (int p = 1; p <= 5; ++p)
        for (int r = 1; r <= 3; ++r) {
            const BasisCatalog catalog(p, r);
            for (int d = 0; d <= r; ++d) {
                long count = 0;
                for (const auto& m : catalog.monomials()) count += (m.total_degree == d);
                // binomial(p+d-1, d) via the degree-d slice of an exact-degree count
                const long expected =
                    oracles::count_monomials(p, d) - (d > 0 ? oracles::count_monomials(p, d - 1) : 0);
                CHECK(count == expected);
            }
        }
}

TEST_CASE("exponent vectors are unique and respect the degree cap") {
    const BasisCatalog catalog(4, 3);
    std::set<std::vector<int>> seen;
    for (const auto& m : catalog.monomials()) {
        CHECK(m.total_degree <= 3);
        CHECK(m.total_degree ==
              std::accumulate(m.exponents.begin(), m.exponents.end(), 0));
        CHECK(seen.insert(m.exponents).second);
    }
}
