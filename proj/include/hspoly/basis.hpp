#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hspoly/errors.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// One scaled monomial feature, identified by its exponent vector.
struct MonomialIndex {
    std::vector<int> exponents;  ///< length p, exponent of each input
    int total_degree = 0;        ///< sum of exponents
};

/// Number of monomials of total degree <= r in p inputs, i.e. binomial(p+r, r).
/// Throws capacity_error if the count does not fit a 32-bit signed index.
inline std::int64_t basis_size(int p, int r) {
    if (p < 1 || r < 1) throw argument_error("basis_size: require p >= 1 and r >= 1");
    std::uint64_t value = 1;
    for (int i = 1; i <= r; ++i) {
        const std::uint64_t numer = static_cast<std::uint64_t>(p) + static_cast<std::uint64_t>(i);
        if (value > std::numeric_limits<std::uint64_t>::max() / numer)
            throw capacity_error("basis_size: binomial(p+r, r) overflows");
        value = value * numer / static_cast<std::uint64_t>(i);
    }
    if (value > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max()))
        throw capacity_error("basis_size: " + std::to_string(value) +
                             " monomials exceed the supported index range; reduce p or r");
    return static_cast<std::int64_t>(value);
}

/// The full scaled monomial basis of total degree <= r in p inputs, together
/// with the hierarchy index structure: dependents per input and ancestors per
/// monomial. Immutable after construction; safe for concurrent reads.
///
/// Monomial order is graded lexicographic: degree ascending, and within one
/// degree the exponent vectors descending lexicographically, so for p=3, r=2
/// the order is 1, x1, x2, x3, x1^2, x1*x2, x1*x3, x2^2, x2*x3, x3^2.
///
/// Each monomial carries the scaling that makes the basis reproduce the
/// inhomogeneous polynomial kernel: scaling(j)^2 is the multinomial
/// coefficient r! / ((r-d)! * prod_i e_i!) with d the total degree, i.e. the
/// number of distinct orderings of the ancestor multiset padded to r slots.
/// For the constant monomial the count is 1.
class BasisCatalog {
public:
    BasisCatalog(int p, int r) : p_(p), r_(r) {
        const std::int64_t f = basis_size(p, r);  // validates p, r
        monomials_.reserve(static_cast<std::size_t>(f));
        std::vector<int> exponents(static_cast<std::size_t>(p), 0);
        for (int degree = 0; degree <= r; ++degree) emit(exponents, 0, degree, degree);

        scaling_.resize(static_cast<Index>(monomials_.size()));
        dependents_.assign(static_cast<std::size_t>(p), {});
        ancestors_.resize(monomials_.size());
        for (std::size_t j = 0; j < monomials_.size(); ++j) {
            const MonomialIndex& m = monomials_[j];
            scaling_[static_cast<Index>(j)] = compute_scaling(m, r);
            for (int i = 0; i < p; ++i) {
                const int e = m.exponents[static_cast<std::size_t>(i)];
                if (e > 0) dependents_[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
                ancestors_[j].insert(ancestors_[j].end(), static_cast<std::size_t>(e), i);
            }
            index_of_[m.exponents] = static_cast<int>(j);
        }
    }

    int p() const noexcept { return p_; }
    int r() const noexcept { return r_; }
    int f() const noexcept { return static_cast<int>(monomials_.size()); }

    const MonomialIndex& monomial(int j) const { return monomials_[check_monomial(j)]; }
    const std::vector<MonomialIndex>& monomials() const noexcept { return monomials_; }

    double scaling(int j) const { return scaling_[static_cast<Index>(check_monomial(j))]; }
    const Vector& scalings() const noexcept { return scaling_; }

    /// Indices of the monomials that depend on input i (exponent >= 1).
    const std::vector<int>& dependents(int i) const {
        if (i < 0 || i >= p_) throw argument_error("dependents: input index out of range");
        return dependents_[static_cast<std::size_t>(i)];
    }

    /// Multiset of inputs making up monomial j, with multiplicity = exponent.
    /// Empty for the constant monomial.
    const std::vector<int>& ancestors(int j) const { return ancestors_[check_monomial(j)]; }

    /// Index of the monomial with the given exponent vector, or -1.
    int index_of(const std::vector<int>& exponents) const {
        const auto it = index_of_.find(exponents);
        return it == index_of_.end() ? -1 : it->second;
    }

    /// Scaled evaluation of monomial j at every row of X: scaling(j) * prod_i x_i^{e_i}.
    Vector feature_column(const Matrix& X, int j) const {
        check_inputs(X);
        const MonomialIndex& m = monomials_[check_monomial(j)];
        Vector column = Vector::Constant(X.rows(), scaling_[static_cast<Index>(j)]);
        for (int i = 0; i < p_; ++i)
            for (int e = 0; e < m.exponents[static_cast<std::size_t>(i)]; ++e)
                column.array() *= X.col(i).array();
        return column;
    }

    /// Explicit n x f feature expansion; entry (t, j) is monomial j at row t.
    /// Intended for desk-scale f.
    Matrix feature_map(const Matrix& X) const {
        check_inputs(X);
        Matrix features(X.rows(), f());
        for (int j = 0; j < f(); ++j) features.col(j) = feature_column(X, j);
        return features;
    }

private:
    void emit(std::vector<int>& exponents, int input, int remaining, int degree) {
        if (input == p_ - 1) {
            exponents[static_cast<std::size_t>(input)] = remaining;
            monomials_.push_back(MonomialIndex{exponents, degree});
            exponents[static_cast<std::size_t>(input)] = 0;
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            exponents[static_cast<std::size_t>(input)] = e;
            emit(exponents, input + 1, remaining - e, degree);
        }
        exponents[static_cast<std::size_t>(input)] = 0;
    }

    static double compute_scaling(const MonomialIndex& m, int r) {
        // r * (r-1) * ... * (r-d+1) / prod_i e_i!, exact in double for r <= 18.
        double count = 1.0;
        for (int t = 0; t < m.total_degree; ++t) count *= static_cast<double>(r - t);
        for (int e : m.exponents)
            for (int q = 2; q <= e; ++q) count /= static_cast<double>(q);
        return std::sqrt(count);
    }

    std::size_t check_monomial(int j) const {
        if (j < 0 || j >= f()) throw argument_error("monomial index out of range");
        return static_cast<std::size_t>(j);
    }

    void check_inputs(const Matrix& X) const {
        if (X.cols() != p_)
            throw argument_error("input matrix has " + std::to_string(X.cols()) +
                                 " columns, catalog expects " + std::to_string(p_));
    }

    int p_;
    int r_;
    std::vector<MonomialIndex> monomials_;
    Vector scaling_;
    std::vector<std::vector<int>> dependents_;
    std::vector<std::vector<int>> ancestors_;
    std::map<std::vector<int>, int> index_of_;
};

inline BasisCatalog enumerate_basis(int p, int r) { return BasisCatalog(p, r); }

}  // namespace hspoly
