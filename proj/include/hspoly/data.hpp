#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hspoly/basis.hpp"
#include "hspoly/csv.hpp"
#include "hspoly/errors.hpp"
#include "hspoly/rng.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// Synthetic hierarchical sparse regression instance.
///
/// X has iid standard normal entries. The k true inputs I are a uniform
/// subset of [p]; the l true monomials are a uniform subset of the non-constant
/// monomials all of whose ancestors lie in I (so the ground truth is
/// (k, l)-sparse by construction); their coefficients are uniform in {-1, +1}.
/// The noise is drawn standard normal and rescaled so that
/// ||m(X) w_true|| / ||E|| equals sqrt(snr) exactly.
struct SyntheticInstance {
    Matrix X;
    Vector Y;
    Vector w_true;                   ///< length f
    std::vector<int> true_inputs;    ///< ascending, size k
    std::vector<int> true_monomials; ///< ascending, size l
    int p = 0, k = 0, l = 0, r = 0;
    long n = 0;
    double snr = 0.0;  ///< ||signal||^2 / ||noise||^2; infinity means noiseless
    std::uint64_t seed = 0;
    double signal_norm = 0.0;
    double noise_norm = 0.0;
};

inline SyntheticInstance gen_synthetic(int p, int k, int l, int r, long n, double snr,
                                       std::uint64_t seed) {
    if (p < 1 || r < 1 || n < 1) throw argument_error("gen_synthetic: require p, r, n >= 1");
    if (k < 1 || k > p) throw argument_error("gen_synthetic: require 1 <= k <= p");
    if (l < 1) throw argument_error("gen_synthetic: require l >= 1");
    if (!(snr > 0.0)) throw argument_error("gen_synthetic: require snr > 0");

    const BasisCatalog catalog(p, r);

    SyntheticInstance instance;
    instance.p = p;
    instance.k = k;
    instance.l = l;
    instance.r = r;
    instance.n = n;
    instance.snr = snr;
    instance.seed = seed;

    // Streams: 0 inputs, 1 support selection, 2 coefficient signs, 3 noise.
    PhiloxRng x_rng(seed, 0);
    instance.X.resize(n, p);
    for (long t = 0; t < n; ++t)
        for (int i = 0; i < p; ++i) instance.X(t, i) = x_rng.normal();

    PhiloxRng support_rng(seed, 1);
    std::vector<int> candidates;
    for (int attempt = 0;; ++attempt) {
        instance.true_inputs = support_rng.sample_without_replacement(p, k);
        candidates.clear();
        for (int j = 0; j < catalog.f(); ++j) {
            const auto& ancestors = catalog.ancestors(j);
            if (ancestors.empty()) continue;  // constant monomial carries no input
            const bool inside = std::all_of(ancestors.begin(), ancestors.end(), [&](int i) {
                return std::binary_search(instance.true_inputs.begin(),
                                          instance.true_inputs.end(), i);
            });
            if (inside) candidates.push_back(j);
        }
        if (static_cast<int>(candidates.size()) >= l) break;
        if (attempt >= 99)
            throw argument_error("gen_synthetic: only " + std::to_string(candidates.size()) +
                                 " monomials available on the drawn inputs; reduce l");
    }
    std::vector<int> picks =
        support_rng.sample_without_replacement(static_cast<int>(candidates.size()), l);
    instance.true_monomials.reserve(static_cast<std::size_t>(l));
    for (int pick : picks) instance.true_monomials.push_back(candidates[static_cast<std::size_t>(pick)]);

    PhiloxRng sign_rng(seed, 2);
    instance.w_true = Vector::Zero(catalog.f());
    for (int j : instance.true_monomials)
        instance.w_true[j] = sign_rng.uniform_below(2) == 0 ? 1.0 : -1.0;

    Vector signal = Vector::Zero(n);
    for (int j : instance.true_monomials)
        signal += catalog.feature_column(instance.X, j) * instance.w_true[j];
    instance.signal_norm = signal.norm();

    PhiloxRng noise_rng(seed, 3);
    Vector noise(n);
    for (long t = 0; t < n; ++t) noise[t] = noise_rng.normal();
    if (std::isinf(snr)) {
        noise.setZero();
    } else {
        const double raw_norm = noise.norm();
        const double target = instance.signal_norm / std::sqrt(snr);
        noise *= raw_norm > 0.0 ? target / raw_norm : 0.0;
    }
    instance.noise_norm = noise.norm();
    instance.Y = signal + noise;
    return instance;
}

/// Percentage of true features recovered: 100 |found ∩ truth| / |truth|.
inline double accuracy_pct(const std::vector<int>& found, const std::vector<int>& truth) {
    if (truth.empty()) throw argument_error("accuracy_pct: empty truth set");
    std::vector<int> a = found, b = truth;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<int> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return 100.0 * static_cast<double>(common.size()) / static_cast<double>(b.size());
}

/// Percentage of selected features that are spurious: 100 |found \ truth| / |found|.
/// An empty found set wrongly includes nothing, so it scores 0.
inline double false_alarm_pct(const std::vector<int>& found, const std::vector<int>& truth) {
    if (found.empty()) return 0.0;
    std::vector<int> a = found, b = truth;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<int> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return 100.0 * static_cast<double>(a.size() - common.size()) / static_cast<double>(a.size());
}

/// Out-of-sample test error: sum of per-sample prediction error norms over
/// the square root of the test-set size.
inline double test_error(const Vector& predictions, const Vector& actual) {
    if (actual.size() == 0) throw argument_error("test_error: empty test set");
    if (predictions.size() != actual.size())
        throw argument_error("test_error: prediction/actual size mismatch");
    return (predictions - actual).cwiseAbs().sum() / std::sqrt(static_cast<double>(actual.size()));
}

/// One 80/10/10 split of [n].
struct Fold {
    std::vector<int> train, validation, test;
};

/// `count` independent shuffled 80/10/10 splits, reproducible from the seed.
inline std::vector<Fold> make_folds(long n, int count, std::uint64_t seed) {
    if (n < 10) throw argument_error("make_folds: require n >= 10");
    if (count < 1) throw argument_error("make_folds: require count >= 1");
    std::vector<Fold> folds;
    folds.reserve(static_cast<std::size_t>(count));
    const long tenth = n / 10;
    for (int fold_index = 0; fold_index < count; ++fold_index) {
        PhiloxRng rng(seed, 0x464F4C44ull + static_cast<std::uint64_t>(fold_index));
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        Fold fold;
        fold.test.assign(order.begin(), order.begin() + tenth);
        fold.validation.assign(order.begin() + tenth, order.begin() + 2 * tenth);
        fold.train.assign(order.begin() + 2 * tenth, order.end());
        std::sort(fold.test.begin(), fold.test.end());
        std::sort(fold.validation.begin(), fold.validation.end());
        std::sort(fold.train.begin(), fold.train.end());
        folds.push_back(std::move(fold));
    }
    return folds;
}

/// Tabular dataset loaded from CSV, with inputs rescaled to unit norm.
struct Dataset {
    Matrix X;
    Vector Y;
    std::vector<std::string> input_names;
    std::vector<double> input_norms;          ///< original column norms
    std::vector<std::string> dropped_columns; ///< zero-norm inputs, removed
};

/// Parse a rectangular numeric CSV with a header row, take `response_column`
/// as Y and every other column as an input. Each input column is divided by
/// its Euclidean norm; zero-norm columns are dropped and recorded.
inline Dataset load_csv(const std::string& path, const std::string& response_column) {
    CsvReader reader(path);
    std::vector<std::string> header;
    long line = 0;
    if (!reader.next(header, line)) throw data_error("empty CSV file: " + path);

    long response_index = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == response_column) response_index = static_cast<long>(c);
    if (response_index < 0)
        throw data_error("response column '" + response_column + "' not found in " + path);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> fields;
    while (reader.next(fields, line)) {
        if (fields.size() != header.size())
            throw data_error("ragged row: expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(fields.size()),
                             line);
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row[c] = parse_double(fields[c], line, static_cast<long>(c) + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error("CSV file has a header but no data rows: " + path);

    const long n = static_cast<long>(rows.size());
    const long p_raw = static_cast<long>(header.size()) - 1;

    Dataset dataset;
    dataset.Y.resize(n);
    for (long t = 0; t < n; ++t)
        dataset.Y[t] = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(response_index)];

    std::vector<long> kept;
    for (long c = 0; c < static_cast<long>(header.size()); ++c) {
        if (c == response_index) continue;
        double norm_sq = 0.0;
        for (long t = 0; t < n; ++t) {
            const double v = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
            norm_sq += v * v;
        }
        if (norm_sq == 0.0) {
            dataset.dropped_columns.push_back(header[static_cast<std::size_t>(c)]);
            continue;
        }
        kept.push_back(c);
        dataset.input_norms.push_back(std::sqrt(norm_sq));
        dataset.input_names.push_back(header[static_cast<std::size_t>(c)]);
    }
    (void)p_raw;

    dataset.X.resize(n, static_cast<long>(kept.size()));
    for (std::size_t kc = 0; kc < kept.size(); ++kc) {
        const long c = kept[kc];
        const double norm = dataset.input_norms[kc];
        for (long t = 0; t < n; ++t)
            dataset.X(t, static_cast<long>(kc)) =
                rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] / norm;
    }
    return dataset;
}

/// Write a synthetic instance as a data CSV (columns x1..xp, y). File ids are
/// 1-based to match the column naming.
inline void save_instance_csv(const SyntheticInstance& instance, const std::string& path) {
    CsvWriter writer(path);
    std::vector<std::string> row;
    for (int i = 1; i <= instance.p; ++i) row.push_back("x" + std::to_string(i));
    row.push_back("y");
    writer.row(row);
    for (long t = 0; t < instance.n; ++t) {
        row.clear();
        for (int i = 0; i < instance.p; ++i)
            row.push_back(format_double(instance.X(t, i), 17));
        row.push_back(format_double(instance.Y[t], 17));
        writer.row(row);
    }
}

}  // namespace hspoly
