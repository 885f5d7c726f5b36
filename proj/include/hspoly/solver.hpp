#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hspoly/basis.hpp"
#include "hspoly/errors.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// Joint monomial / input selection. Feasible patterns satisfy the knapsack
/// constraints sum(s) <= l, sum(h) <= k and the hierarchy s_j <= h_i for
/// every ancestor i of monomial j.
struct SparsityPattern {
    std::vector<std::uint8_t> s;  ///< length f, monomial selection
    std::vector<std::uint8_t> h;  ///< length p, input selection
};

inline std::vector<int> support_of(const std::vector<std::uint8_t>& s) {
    std::vector<int> support;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j]) support.push_back(static_cast<int>(j));
    return support;
}

/// Smallest input selection consistent with the monomial selection.
inline std::vector<std::uint8_t> minimal_inputs(const BasisCatalog& catalog,
                                                const std::vector<std::uint8_t>& s) {
    std::vector<std::uint8_t> h(static_cast<std::size_t>(catalog.p()), 0);
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s[j])
            for (int i : catalog.ancestors(static_cast<int>(j)))
                h[static_cast<std::size_t>(i)] = 1;
    return h;
}

inline SparsityPattern pattern_from_support(const BasisCatalog& catalog,
                                            const std::vector<int>& support) {
    SparsityPattern pattern;
    pattern.s.assign(static_cast<std::size_t>(catalog.f()), 0);
    for (int j : support) {
        if (j < 0 || j >= catalog.f())
            throw argument_error("pattern_from_support: monomial index out of range");
        pattern.s[static_cast<std::size_t>(j)] = 1;
    }
    pattern.h = minimal_inputs(catalog, pattern.s);
    return pattern;
}

inline bool pattern_is_feasible(const BasisCatalog& catalog, const SparsityPattern& pattern,
                                int k, int l) {
    if (static_cast<int>(pattern.s.size()) != catalog.f() ||
        static_cast<int>(pattern.h.size()) != catalog.p())
        return false;
    int s_count = 0;
    for (std::size_t j = 0; j < pattern.s.size(); ++j) {
        if (!pattern.s[j]) continue;
        ++s_count;
        for (int i : catalog.ancestors(static_cast<int>(j)))
            if (!pattern.h[static_cast<std::size_t>(i)]) return false;
    }
    int h_count = 0;
    for (std::uint8_t hi : pattern.h) h_count += hi;
    return s_count <= l && h_count <= k;
}

/// One affine underestimator of the regression loss:
/// g(s) = value_at_anchor + gradient . (s - anchor) <= c(s) for all binary s.
struct Cut {
    double value_at_anchor = 0.0;
    Vector gradient;                   ///< length f, entries <= 0
    std::vector<std::uint8_t> anchor;  ///< the binary s the cut is tangent at
    double offset = 0.0;               ///< value_at_anchor - gradient . anchor

    double value_at(const std::vector<std::uint8_t>& s) const {
        double value = offset;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s[j]) value += gradient[static_cast<Index>(j)];
        return value;
    }

    double value_at_support(const std::vector<int>& support) const {
        double value = offset;
        for (int j : support) value += gradient[j];
        return value;
    }
};

struct SolveLimits {
    double time_limit_seconds = 120.0;
    std::int64_t node_limit = -1;  ///< < 0 means unlimited
    double rel_gap = 1e-6;
};

enum class Termination { converged, time_limit, node_limit };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::time_limit: return "time_limit";
        case Termination::node_limit: return "node_limit";
    }
    return "unknown";
}

struct SolveDiagnostics {
    int n = 0, p = 0, f = 0, k = 0, l = 0;
    double gamma = 0.0;
    std::int64_t cuts = 0;         ///< stored cutting planes
    std::int64_t evaluations = 0;  ///< full loss evaluations; equals cuts
    std::int64_t nodes = 0;        ///< branch-and-bound nodes expanded
    double wall_seconds = 0.0;
    double objective = 0.0;    ///< original Y scale
    double lower_bound = 0.0;  ///< original Y scale
    double gap = 0.0;          ///< (objective - bound) / max(1, objective), normalized scale
    double y_norm = 0.0;       ///< internal normalization applied to Y
    Termination termination = Termination::converged;
    std::vector<double> incumbent_history;  ///< normalized incumbent values, non-increasing
    std::vector<double> bound_history;      ///< normalized global bounds, non-decreasing
};

inline std::string diagnostics_csv_header() {
    return "n,p_prime,f,k,l,gamma,cuts,nodes,wall_seconds,objective,gap,termination";
}

inline std::string diagnostics_csv_row(const SolveDiagnostics& d) {
    std::ostringstream out;
    out.precision(12);
    out << d.n << ',' << d.p << ',' << d.f << ',' << d.k << ',' << d.l << ',' << d.gamma << ','
        << d.cuts << ',' << d.nodes << ',' << d.wall_seconds << ',' << d.objective << ',' << d.gap
        << ',' << to_string(d.termination);
    return out.str();
}

/// Exact solver output: the selected pattern, dense ridge coefficients on the
/// support, the achieved loss and solve diagnostics.
struct SparseFit {
    SparsityPattern pattern;
    std::vector<int> support;  ///< selected monomial indices, ascending
    Vector coefficients;       ///< aligned with `support`
    double objective = 0.0;
    SolveDiagnostics diagnostics;
};

/// Ridge refit on the selected scaled monomial columns:
/// w = (I/gamma + Z^T Z)^{-1} Z^T Y with Z the support columns of the feature map.
inline Vector recover_coefficients(const BasisCatalog& catalog, const Matrix& X, const Vector& Y,
                                   const std::vector<int>& support, double gamma) {
    if (gamma <= 0.0) throw argument_error("recover_coefficients: require gamma > 0");
    if (X.rows() != Y.size()) throw argument_error("recover_coefficients: X/Y row mismatch");
    const Index m = static_cast<Index>(support.size());
    if (m == 0) return Vector();
    Matrix Z(X.rows(), m);
    for (Index c = 0; c < m; ++c) Z.col(c) = catalog.feature_column(X, support[c]);
    Matrix G = Z.transpose() * Z;
    G.diagonal().array() += 1.0 / gamma;
    return detail::robust_llt(G).solve(Z.transpose() * Y);
}

/// Loss oracle over monomial supports, with the explicit feature expansion
/// cached. Evaluation goes through the primal normal equations when the
/// support is small relative to n and through the dual kernel solve otherwise.
class CutOracle {
public:
    CutOracle(const BasisCatalog& catalog, const Matrix& X, Vector Y, double gamma)
        : features_(catalog.feature_map(X)), Y_(std::move(Y)), gamma_(gamma) {
        if (features_.rows() != Y_.size()) throw argument_error("CutOracle: X/Y row mismatch");
        if (gamma <= 0.0) throw argument_error("CutOracle: require gamma > 0");
        half_y_sq_ = 0.5 * Y_.squaredNorm();
    }

    struct Evaluation {
        double value = 0.0;
        Vector alpha;
    };

    Evaluation evaluate(const std::vector<int>& support) const {
        Evaluation eval;
        const Index n = Y_.size();
        const Index m = static_cast<Index>(support.size());
        if (m == 0) {
            eval.alpha = Y_;
            eval.value = half_y_sq_;
            return eval;
        }
        Matrix Z(n, m);
        for (Index c = 0; c < m; ++c) Z.col(c) = features_.col(support[c]);
        if (2 * m <= n) {
            Matrix G = Z.transpose() * Z;
            G.diagonal().array() += 1.0 / gamma_;
            const Vector v = detail::robust_llt(G).solve(Z.transpose() * Y_);
            eval.alpha = Y_ - Z * v;
        } else {
            const KernelMatrix K_s = Z * Z.transpose();
            eval.alpha = ridge_dual_solve(K_s, Y_, gamma_).alpha;
        }
        eval.value = 0.5 * Y_.dot(eval.alpha);
        return eval;
    }

    /// Cut tangent at the given selection: exact value plus all f per-monomial
    /// subgradients -(gamma/2) (phi_j . alpha)^2, each an O(n) inner product.
    Cut cut_at(const std::vector<std::uint8_t>& s, const Evaluation& eval) const {
        Cut cut;
        cut.anchor = s;
        cut.value_at_anchor = eval.value;
        cut.gradient = (-0.5 * gamma_) * (features_.transpose() * eval.alpha).array().square();
        cut.offset = cut.value_at_anchor;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s[j]) cut.offset -= cut.gradient[static_cast<Index>(j)];
        return cut;
    }

    const Matrix& features() const noexcept { return features_; }
    double gamma() const noexcept { return gamma_; }
    double half_y_squared_norm() const noexcept { return half_y_sq_; }

private:
    Matrix features_;
    Vector Y_;
    double gamma_;
    double half_y_sq_ = 0.0;
};

/// Cut anchored at a feasible pattern, with exact loss value and the full
/// per-monomial subgradient vector.
inline Cut evaluate_cut(const BasisCatalog& catalog, const Matrix& X, const Vector& Y,
                        double gamma, const SparsityPattern& pattern) {
    if (!pattern_is_feasible(catalog, pattern, catalog.p(), catalog.f()))
        throw argument_error("evaluate_cut: pattern violates the hierarchy constraints");
    const CutOracle oracle(catalog, X, Y, gamma);
    const std::vector<int> support = support_of(pattern.s);
    return oracle.cut_at(pattern.s, oracle.evaluate(support));
}

namespace detail {

/// -1 free, 0 fixed to zero, 1 fixed to one.
using VarState = std::vector<std::int8_t>;

inline std::vector<std::vector<int>> distinct_ancestors(const BasisCatalog& catalog) {
    std::vector<std::vector<int>> result(static_cast<std::size_t>(catalog.f()));
    for (int j = 0; j < catalog.f(); ++j) {
        std::vector<int> inputs = catalog.ancestors(j);
        inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
        result[static_cast<std::size_t>(j)] = std::move(inputs);
    }
    return result;
}

struct NodeBound {
    double bound = 0.0;
    int binding_cut = -1;
};

/// Valid lower bound on min over completions of max_u cut_u(s), given the
/// partial assignment. Per cut the completion is relaxed: the l_rem most
/// negative gradients are admitted among free monomials that are not blocked
/// by an excluded ancestor and whose unfixed ancestors individually fit the
/// remaining input budget. Relaxing the joint budget keeps the bound valid;
/// tightness only affects search speed. The eta >= 0 master constraint caps
/// the bound below at zero. `first_cut` restricts the scan to the root cut
/// plus a recent window; a subset of cuts still gives a valid bound.
inline std::optional<NodeBound> node_bound(const std::vector<Cut>& cuts,
                                           const std::vector<std::vector<int>>& anc,
                                           const VarState& h_state, const VarState& s_state,
                                           int k, int l, std::size_t first_cut = 0) {
    const std::size_t f = s_state.size();
    int s_ones = 0, h_ones = 0;
    for (std::int8_t v : s_state) s_ones += (v == 1);
    for (std::int8_t v : h_state) h_ones += (v == 1);
    if (s_ones > l || h_ones > k) return std::nullopt;
    for (std::size_t j = 0; j < f; ++j)
        if (s_state[j] == 1)
            for (int i : anc[j])
                if (h_state[static_cast<std::size_t>(i)] == 0) return std::nullopt;

    const int l_rem = l - s_ones;
    const int k_rem = k - h_ones;

    std::vector<int> admissible;
    admissible.reserve(f);
    for (std::size_t j = 0; j < f; ++j) {
        if (s_state[j] != -1) continue;
        bool blocked = false;
        int new_inputs = 0;
        for (int i : anc[j]) {
            const std::int8_t hs = h_state[static_cast<std::size_t>(i)];
            if (hs == 0) {
                blocked = true;
                break;
            }
            if (hs == -1) ++new_inputs;
        }
        if (!blocked && new_inputs <= k_rem) admissible.push_back(static_cast<int>(j));
    }

    NodeBound result;
    result.bound = 0.0;  // eta >= 0
    std::vector<double> scratch;
    scratch.reserve(admissible.size());
    const auto consider = [&](std::size_t u) {
        const Cut& cut = cuts[u];
        if (cut.gradient.size() == 0) return;  // evicted from the window
        double value = cut.offset;
        for (std::size_t j = 0; j < f; ++j)
            if (s_state[j] == 1) value += cut.gradient[static_cast<Index>(j)];
        if (l_rem > 0 && !admissible.empty()) {
            scratch.clear();
            for (int j : admissible) scratch.push_back(cut.gradient[j]);
            const std::size_t take = std::min<std::size_t>(scratch.size(),
                                                           static_cast<std::size_t>(l_rem));
            std::nth_element(scratch.begin(), scratch.begin() + (take - 1), scratch.end());
            for (std::size_t t = 0; t < take; ++t)
                if (scratch[t] < 0.0) value += scratch[t];
        }
        if (value > result.bound) {
            result.bound = value;
            result.binding_cut = static_cast<int>(u);
        }
    };
    if (!cuts.empty()) consider(0);
    for (std::size_t u = std::max<std::size_t>(first_cut, 1); u < cuts.size(); ++u) consider(u);
    return result;
}

}  // namespace detail

/// Lower bound of the cutting-plane master over all completions of a partial
/// (h, s) assignment (entries -1 free, 0 fixed off, 1 fixed on). Returns
/// nullopt when the partial assignment is infeasible.
inline std::optional<double> master_lower_bound(const std::vector<Cut>& cuts,
                                                const BasisCatalog& catalog,
                                                const std::vector<std::int8_t>& h_state,
                                                const std::vector<std::int8_t>& s_state,
                                                int k, int l) {
    if (static_cast<int>(h_state.size()) != catalog.p() ||
        static_cast<int>(s_state.size()) != catalog.f())
        throw argument_error("master_lower_bound: state size mismatch");
    // Raise ancestors implied by fixed monomials before counting the budget.
    std::vector<std::int8_t> h = h_state;
    for (std::size_t j = 0; j < s_state.size(); ++j)
        if (s_state[j] == 1)
            for (int i : catalog.ancestors(static_cast<int>(j))) {
                if (h[static_cast<std::size_t>(i)] == 0) return std::nullopt;
                h[static_cast<std::size_t>(i)] = 1;
            }
    const auto bound = detail::node_bound(cuts, detail::distinct_ancestors(catalog), h, s_state,
                                          k, l);
    if (!bound) return std::nullopt;
    return bound->bound;
}

namespace detail {

struct SearchNode {
    VarState h;
    VarState s;
    int h_ones = 0;
    int s_ones = 0;
    int s_free = 0;
    int h_free = 0;
    double bound = 0.0;
    std::size_t cuts_seen = 0;
};

struct SupportHash {
    std::size_t operator()(const std::vector<int>& support) const noexcept {
        std::uint64_t hash = 1469598103934665603ull;
        for (int j : support) {
            hash ^= static_cast<std::uint64_t>(j) + 0x9E3779B97F4A7C15ull;
            hash *= 1099511628211ull;
        }
        return static_cast<std::size_t>(hash);
    }
};

}  // namespace detail

/// Exact hierarchical (k, l)-sparse regression by outer approximation with
/// lazy cuts inside a single branch-and-bound tree over (h, s).
///
/// The search fixes input variables first (pruning whole monomial families via
/// the hierarchy), then monomials inside the admitted inputs, diving into the
/// child with the smaller master bound. Every integer-feasible leaf triggers
/// at most one full loss evaluation, whose tangent cut is added to the master
/// for the rest of the tree. Y is normalized to unit norm internally; outputs
/// are rescaled and the factor recorded in the diagnostics.
inline SparseFit solve_hierarchical(const BasisCatalog& catalog, const Matrix& X, const Vector& Y,
                                    int k, int l, double gamma, const SolveLimits& limits = {}) {
    const int p = catalog.p();
    const int f = catalog.f();
    if (k < 1 || k > p) throw argument_error("solve_hierarchical: require 1 <= k <= p");
    if (l < 1 || l > f) throw argument_error("solve_hierarchical: require 1 <= l <= f");
    if (gamma <= 0.0) throw argument_error("solve_hierarchical: require gamma > 0");
    if (limits.time_limit_seconds <= 0.0)
        throw argument_error("solve_hierarchical: time limit must be positive");
    if (limits.node_limit == 0) throw argument_error("solve_hierarchical: node limit must be nonzero");
    if (limits.rel_gap < 0.0) throw argument_error("solve_hierarchical: gap must be non-negative");
    if (X.rows() != Y.size()) throw argument_error("solve_hierarchical: X/Y row mismatch");

    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    SparseFit fit;
    fit.diagnostics.n = static_cast<int>(X.rows());
    fit.diagnostics.p = p;
    fit.diagnostics.f = f;
    fit.diagnostics.k = k;
    fit.diagnostics.l = l;
    fit.diagnostics.gamma = gamma;

    const double y_norm = Y.norm();
    fit.diagnostics.y_norm = y_norm;
    fit.pattern.s.assign(static_cast<std::size_t>(f), 0);
    fit.pattern.h.assign(static_cast<std::size_t>(p), 0);
    if (y_norm == 0.0) {
        fit.diagnostics.wall_seconds = elapsed();
        return fit;
    }

    const CutOracle oracle(catalog, X, Y / y_norm, gamma);
    const auto anc = detail::distinct_ancestors(catalog);

    // Bounding scans the root cut plus a recent window; older cut gradients
    // are dropped to keep node costs and memory flat over long runs.
    constexpr std::size_t kCutWindow = 256;
    std::vector<Cut> cuts;
    std::unordered_map<std::vector<int>, double, detail::SupportHash> memo;
    const auto window_start = [&] {
        return cuts.size() > kCutWindow ? cuts.size() - kCutWindow : std::size_t{0};
    };

    double incumbent = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> incumbent_s;
    auto& incumbent_history = fit.diagnostics.incumbent_history;
    auto& bound_history = fit.diagnostics.bound_history;

    // Evaluate a support once; returns its loss and stores the tangent cut on
    // first evaluation, keeping #evaluations == #cuts. Only feasible points
    // may become the incumbent (closure supersets are evaluated for bounding
    // and usually violate the cardinality budgets).
    std::int64_t evaluations = 0;
    const auto is_feasible_point = [&](const std::vector<int>& support) {
        if (static_cast<int>(support.size()) > l) return false;
        std::vector<std::uint8_t> inputs(static_cast<std::size_t>(p), 0);
        int used = 0;
        for (int j : support)
            for (int i : anc[static_cast<std::size_t>(j)])
                if (!inputs[static_cast<std::size_t>(i)]) {
                    inputs[static_cast<std::size_t>(i)] = 1;
                    ++used;
                }
        return used <= k;
    };
    const auto evaluate_support = [&](const std::vector<int>& support,
                                      const std::vector<std::uint8_t>& s) {
        const auto it = memo.find(support);
        if (it != memo.end()) return it->second;
        ++evaluations;
        const CutOracle::Evaluation eval = oracle.evaluate(support);
        cuts.push_back(oracle.cut_at(s, eval));
        if (cuts.size() > kCutWindow + 1)
            cuts[cuts.size() - kCutWindow - 1].gradient.resize(0);
        memo.emplace(support, eval.value);
        if (eval.value < incumbent && is_feasible_point(support)) {
            incumbent = eval.value;
            incumbent_s = s;
            incumbent_history.push_back(eval.value);
        }
        return eval.value;
    };

    // Greedy forward-selection warm start: repeatedly add the feasible
    // monomial with the most negative subgradient.
    {
        std::vector<std::uint8_t> s(static_cast<std::size_t>(f), 0);
        std::vector<std::uint8_t> h(static_cast<std::size_t>(p), 0);
        std::vector<int> support;
        int h_count = 0;
        for (;;) {
            evaluate_support(support, s);
            if (static_cast<int>(support.size()) >= l) break;
            const Cut& cut = cuts.back();
            int best = -1;
            double best_gradient = 0.0;
            for (int j = 0; j < f; ++j) {
                if (s[static_cast<std::size_t>(j)]) continue;
                int new_inputs = 0;
                for (int i : anc[static_cast<std::size_t>(j)])
                    new_inputs += (h[static_cast<std::size_t>(i)] == 0);
                if (h_count + new_inputs > k) continue;
                const double g = cut.gradient[j];
                if (best == -1 || g < best_gradient) {
                    best = j;
                    best_gradient = g;
                }
            }
            if (best == -1) break;
            s[static_cast<std::size_t>(best)] = 1;
            for (int i : anc[static_cast<std::size_t>(best)]) {
                if (h[static_cast<std::size_t>(i)] == 0) {
                    h[static_cast<std::size_t>(i)] = 1;
                    ++h_count;
                }
            }
            support.insert(std::lower_bound(support.begin(), support.end(), best), best);
        }
    }

    // Static branch orders from the root cut: inputs by the gradient mass of
    // their dependents, monomials by their own gradient (most negative first).
    std::vector<int> input_order(static_cast<std::size_t>(p));
    {
        std::iota(input_order.begin(), input_order.end(), 0);
        Vector mass = Vector::Zero(p);
        for (int i = 0; i < p; ++i)
            for (int j : catalog.dependents(i)) mass[i] -= cuts.front().gradient[j];
        std::stable_sort(input_order.begin(), input_order.end(), [&](int a, int b) {
            if (mass[a] != mass[b]) return mass[a] > mass[b];
            return a < b;
        });
    }
    std::vector<int> monomial_order(static_cast<std::size_t>(f));
    {
        std::iota(monomial_order.begin(), monomial_order.end(), 0);
        const Vector& g0 = cuts.front().gradient;
        std::stable_sort(monomial_order.begin(), monomial_order.end(), [&](int a, int b) {
            if (g0[a] != g0[b]) return g0[a] < g0[b];
            return a < b;
        });
    }

    const auto tolerance = [&] { return std::max(limits.rel_gap * std::max(incumbent, 0.0), 1e-12); };

    // Child-state fixing with hierarchy propagation. Returns false on conflict.
    const auto fix_h_zero = [&](detail::SearchNode& node, int i) {
        auto& hs = node.h[static_cast<std::size_t>(i)];
        if (hs == 0) return true;
        if (hs == 1) return false;
        hs = 0;
        --node.h_free;
        for (int j : catalog.dependents(i)) {
            auto& ss = node.s[static_cast<std::size_t>(j)];
            if (ss == 1) return false;
            if (ss == -1) {
                ss = 0;
                --node.s_free;
            }
        }
        return true;
    };
    const auto fix_h_one = [&](detail::SearchNode& node, int i) {
        auto& hs = node.h[static_cast<std::size_t>(i)];
        if (hs == 1) return true;
        if (hs == 0) return false;
        hs = 1;
        --node.h_free;
        ++node.h_ones;
        return node.h_ones <= k;
    };
    const auto close_h_budget = [&](detail::SearchNode& node) {
        if (node.h_ones < k || node.h_free == 0) return true;
        for (int i = 0; i < p; ++i)
            if (node.h[static_cast<std::size_t>(i)] == -1 && !fix_h_zero(node, i)) return false;
        return true;
    };
    const auto fix_s_zero = [&](detail::SearchNode& node, int j) {
        auto& ss = node.s[static_cast<std::size_t>(j)];
        if (ss == 0) return true;
        if (ss == 1) return false;
        ss = 0;
        --node.s_free;
        return true;
    };
    const auto fix_s_one = [&](detail::SearchNode& node, int j) {
        auto& ss = node.s[static_cast<std::size_t>(j)];
        if (ss == 1) return true;
        if (ss == 0) return false;
        ss = 1;
        --node.s_free;
        ++node.s_ones;
        if (node.s_ones > l) return false;
        for (int i : anc[static_cast<std::size_t>(j)])
            if (!fix_h_one(node, i)) return false;
        if (!close_h_budget(node)) return false;
        if (node.s_ones == l && node.s_free > 0) {
            for (int j2 = 0; j2 < f; ++j2)
                if (node.s[static_cast<std::size_t>(j2)] == -1 && !fix_s_zero(node, j2))
                    return false;
        }
        return true;
    };

    // Depth-first search with best-bound child ordering; the stack keeps
    // memory proportional to the tree depth.
    std::vector<detail::SearchNode> stack;
    {
        detail::SearchNode root;
        root.h.assign(static_cast<std::size_t>(p), -1);
        root.s.assign(static_cast<std::size_t>(f), -1);
        root.h_free = p;
        root.s_free = f;
        bool feasible = true;
        if (k >= p)
            for (int i = 0; i < p && feasible; ++i) feasible = fix_h_one(root, i);
        if (feasible) {
            const auto nb = detail::node_bound(cuts, anc, root.h, root.s, k, l, window_start());
            if (nb) {
                root.bound = nb->bound;
                root.cuts_seen = cuts.size();
                stack.push_back(std::move(root));
            }
        }
    }

    double best_bound = 0.0;
    Termination termination = Termination::converged;
    std::int64_t nodes = 0;
    bool exhausted = false;

    while (!stack.empty()) {
        if (elapsed() > limits.time_limit_seconds) {
            termination = Termination::time_limit;
            break;
        }
        if (limits.node_limit > 0 && nodes >= limits.node_limit) {
            termination = Termination::node_limit;
            break;
        }

        detail::SearchNode node = std::move(stack.back());
        stack.pop_back();

        // Track the global bound: the minimum over this node and all open ones.
        double global_lb = node.bound;
        for (const auto& open : stack) global_lb = std::min(global_lb, open.bound);
        global_lb = std::min(global_lb, incumbent);
        if (global_lb > best_bound) {
            best_bound = global_lb;
            bound_history.push_back(best_bound);
        }

        if (node.bound >= incumbent - tolerance()) continue;

        // Refresh the bound if cuts were added since this node was pushed.
        if (node.cuts_seen < cuts.size()) {
            const auto nb = detail::node_bound(cuts, anc, node.h, node.s, k, l, window_start());
            if (!nb) continue;
            node.bound = nb->bound;
            node.cuts_seen = cuts.size();
            if (node.bound >= incumbent - tolerance()) continue;
        }

        ++nodes;

        if (node.s_free == 0) {
            // Integer-feasible leaf: lazy evaluation and cut generation.
            std::vector<std::uint8_t> s(static_cast<std::size_t>(f));
            for (int j = 0; j < f; ++j) s[static_cast<std::size_t>(j)] =
                static_cast<std::uint8_t>(node.s[static_cast<std::size_t>(j)] == 1);
            double master_value = 0.0;
            const auto account = [&](const Cut& cut) {
                if (cut.gradient.size() != 0)
                    master_value = std::max(master_value, cut.value_at(s));
            };
            account(cuts.front());
            for (std::size_t u = std::max<std::size_t>(window_start(), 1); u < cuts.size(); ++u)
                account(cuts[u]);
            if (master_value < incumbent - tolerance())
                evaluate_support(support_of(s), s);
            continue;
        }

        // Monotone superset bound: the loss is non-increasing in the selection,
        // so c(admissible closure) bounds every completion of this node below.
        // The closure is a binary point, so its tangent cut joins the pool and
        // carries the same bound to the rest of the tree. Diving children keep
        // their parent's closure, making the lookup a free memo hit there.
        {
            std::vector<int> closure;
            std::vector<std::uint8_t> closure_s(static_cast<std::size_t>(f), 0);
            closure.reserve(static_cast<std::size_t>(f));
            for (int j = 0; j < f; ++j)
                if (node.s[static_cast<std::size_t>(j)] != 0) {
                    closure.push_back(j);
                    closure_s[static_cast<std::size_t>(j)] = 1;
                }
            const double closure_value = evaluate_support(closure, closure_s);
            node.bound = std::max(node.bound, closure_value);
            node.cuts_seen = cuts.size();
            if (closure_value >= incumbent - tolerance()) continue;
        }

        // Branch variable: inputs first, then monomials, in root-cut order.
        int branch_input = -1;
        if (node.h_free > 0) {
            for (int i : input_order)
                if (node.h[static_cast<std::size_t>(i)] == -1) {
                    branch_input = i;
                    break;
                }
        }
        int branch_monomial = -1;
        if (branch_input == -1) {
            for (int j : monomial_order)
                if (node.s[static_cast<std::size_t>(j)] == -1) {
                    branch_monomial = j;
                    break;
                }
            if (branch_monomial == -1) continue;
        }

        detail::SearchNode on = node, off = node;
        bool on_ok, off_ok;
        if (branch_input >= 0) {
            on_ok = fix_h_one(on, branch_input) && close_h_budget(on);
            off_ok = fix_h_zero(off, branch_input);
        } else {
            on_ok = fix_s_one(on, branch_monomial);
            off_ok = fix_s_zero(off, branch_monomial);
        }

        detail::SearchNode* children[2] = {nullptr, nullptr};
        int child_count = 0;
        const auto admit = [&](detail::SearchNode& child, bool ok) {
            if (!ok) return;
            const auto nb = detail::node_bound(cuts, anc, child.h, child.s, k, l, window_start());
            if (!nb) return;
            child.bound = nb->bound;
            child.cuts_seen = cuts.size();
            if (child.bound >= incumbent - tolerance()) return;
            children[child_count++] = &child;
        };
        admit(on, on_ok);
        admit(off, off_ok);
        if (child_count == 2 && children[0]->bound < children[1]->bound)
            std::swap(children[0], children[1]);  // better bound on top of the stack
        for (int c = 0; c < child_count; ++c) stack.push_back(std::move(*children[c]));
    }
    if (stack.empty()) {
        exhausted = true;
        best_bound = incumbent;
    }

    fit.diagnostics.nodes = nodes;
    fit.diagnostics.cuts = static_cast<std::int64_t>(cuts.size());
    fit.diagnostics.evaluations = evaluations;
    fit.diagnostics.termination = exhausted ? Termination::converged : termination;
    fit.diagnostics.gap =
        std::max(0.0, incumbent - best_bound) / std::max(1.0, incumbent);

    fit.pattern.s = incumbent_s;
    fit.pattern.h = minimal_inputs(catalog, incumbent_s);
    fit.support = support_of(incumbent_s);
    fit.coefficients = recover_coefficients(catalog, X, Y, fit.support, gamma);
    fit.objective = incumbent * y_norm * y_norm;
    fit.diagnostics.objective = fit.objective;
    fit.diagnostics.lower_bound = best_bound * y_norm * y_norm;
    fit.diagnostics.wall_seconds = elapsed();
    return fit;
}

}  // namespace hspoly
