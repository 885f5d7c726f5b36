// Command-line front end: single fits, input ranking, hyperparameter
// validation on folds, synthetic data emission and the experiment drivers.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hspoly/hspoly.hpp"

namespace {

using nlohmann::json;
using namespace hspoly;

std::string strip_csv_extension(const std::string& path) {
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
        return path.substr(0, path.size() - 4);
    return path;
}

void write_provenance(CsvWriter& writer, const std::string& command, const KvConfig& config) {
    writer.comment("hspoly " + std::string(kVersion));
    writer.comment("command: " + command);
    writer.comment("config digest: " + config.digest());
    std::istringstream lines(config.resolved_text());
    std::string line;
    while (std::getline(lines, line)) writer.comment("  " + line);
}

double resolve_gamma_flag(const std::string& flag, const Matrix& X, int r, double gamma_scale) {
    if (flag == "auto") return auto_gamma(X, r, gamma_scale);
    if (flag == "ranking-default") return 0.0;  // caller substitutes per response
    try {
        std::size_t used = 0;
        const double value = std::stod(flag, &used);
        if (used != flag.size() || value <= 0.0) throw std::invalid_argument(flag);
        return value;
    } catch (const std::exception&) {
        throw argument_error("--gamma must be 'auto' or a positive number, got '" + flag + "'");
    }
}

struct InputData {
    Matrix X;
    Vector Y;
    std::vector<std::string> input_names;
    std::optional<SyntheticInstance> instance;  // when generated in-process
};

InputData load_input(const std::string& in_path, const std::string& response,
                     const std::string& synth_spec, bool unit_scale) {
    InputData data;
    if (!synth_spec.empty()) {
        KvConfig kv;
        std::istringstream tokens(synth_spec);
        std::string token;
        while (std::getline(tokens, token, ',')) kv.set(token);
        const int p = static_cast<int>(kv.get_long("p", 10));
        const SyntheticInstance instance = gen_synthetic(
            p, static_cast<int>(kv.get_long("k", p)), static_cast<int>(kv.get_long("l", 8)),
            static_cast<int>(kv.get_long("r", 2)), kv.get_long("n", 100),
            kv.get_double("snr", 400.0), static_cast<std::uint64_t>(kv.get_long("seed", 1)));
        data.X = instance.X;
        data.Y = instance.Y;
        for (int i = 1; i <= instance.p; ++i) data.input_names.push_back("x" + std::to_string(i));
        data.instance = instance;
        return data;
    }
    if (in_path.empty()) throw argument_error("either --in or --synth is required");
    Dataset dataset = load_csv(in_path, response);
    if (!unit_scale)
        for (std::size_t c = 0; c < dataset.input_norms.size(); ++c)
            dataset.X.col(static_cast<Index>(c)) *= dataset.input_norms[c];
    for (const std::string& dropped : dataset.dropped_columns)
        std::cerr << "warning: dropped zero-norm input column '" << dropped << "'\n";
    data.X = dataset.X;
    data.Y = dataset.Y;
    data.input_names = dataset.input_names;
    return data;
}

json monomial_json(const BasisCatalog& catalog, int j, const std::vector<int>& selected_inputs,
                   int full_p) {
    // Exponents reported in the original input space, ids 1-based.
    std::vector<int> exponents(static_cast<std::size_t>(full_p), 0);
    const auto& local = catalog.monomial(j).exponents;
    for (std::size_t c = 0; c < local.size(); ++c)
        exponents[static_cast<std::size_t>(selected_inputs[c])] = local[c];
    json entry;
    entry["exponents"] = exponents;
    entry["degree"] = catalog.monomial(j).total_degree;
    entry["scaling"] = catalog.scaling(j);
    return entry;
}

// ---------------------------------------------------------------- synth ----

int cmd_synth(int p, int k, int l, int r, long n, double snr, std::uint64_t seed,
              const std::string& out) {
    const SyntheticInstance instance = gen_synthetic(p, k, l, r, n, snr, seed);
    const std::string base = strip_csv_extension(out);
    save_instance_csv(instance, base + ".csv");

    json meta;
    meta["version"] = kVersion;
    meta["p"] = instance.p;
    meta["k"] = instance.k;
    meta["l"] = instance.l;
    meta["r"] = instance.r;
    meta["n"] = instance.n;
    meta["snr"] = std::isinf(instance.snr) ? json("inf") : json(instance.snr);
    meta["seed"] = instance.seed;
    json true_inputs = json::array();
    for (int i : instance.true_inputs) true_inputs.push_back(i + 1);
    meta["true_inputs"] = true_inputs;
    json true_monomials = json::array();
    const BasisCatalog catalog(p, r);
    for (int j : instance.true_monomials) {
        json entry;
        entry["index"] = j + 1;
        entry["exponents"] = catalog.monomial(j).exponents;
        entry["coefficient"] = instance.w_true[j];
        true_monomials.push_back(entry);
    }
    meta["true_monomials"] = true_monomials;
    std::ofstream meta_out(base + ".meta.json");
    if (!meta_out) throw data_error("cannot write " + base + ".meta.json");
    meta_out << meta.dump(2) << '\n';
    std::cout << "wrote " << base << ".csv and " << base << ".meta.json (n=" << n << ", p=" << p
              << ", f=" << catalog.f() << ")\n";
    return 0;
}

// ----------------------------------------------------------------- rank ----

int cmd_rank(const std::string& in, const std::string& response, const std::string& synth_spec,
             int r, const std::string& gamma_flag, int p_prime, const std::string& out,
             bool unit_scale) {
    const InputData data = load_input(in, response, synth_spec, unit_scale);
    const int p = static_cast<int>(data.X.cols());
    if (p_prime <= 0 || p_prime > p) p_prime = p;

    double gamma;
    if (gamma_flag == "auto")
        gamma = default_ranking_gamma(data.Y);
    else
        gamma = resolve_gamma_flag(gamma_flag, data.X, r, 100.0);

    const InputRanking ranking = rank_inputs(data.X, data.Y, r, gamma);
    const std::vector<int> selected = select_top(ranking, p_prime);

    KvConfig config;
    config.set("r", std::to_string(r));
    config.set("gamma", format_double(gamma, 17));
    config.set("p_prime", std::to_string(p_prime));
    CsvWriter writer(out);
    write_provenance(writer, "rank", config);
    writer.raw_line("input,input_name,score,rank,selected");
    for (int position = 0; position < p; ++position) {
        const int i = ranking.order[static_cast<std::size_t>(position)];
        const bool chosen = std::binary_search(selected.begin(), selected.end(), i);
        writer.row({std::to_string(i + 1), data.input_names[static_cast<std::size_t>(i)],
                    format_double(ranking.scores[i], 17), std::to_string(position + 1),
                    chosen ? "1" : "0"});
    }
    std::cout << "ranked " << p << " inputs (gamma=" << gamma << "), selected top " << p_prime
              << " -> " << out << "\n";
    return 0;
}

// ------------------------------------------------------------------ fit ----

struct TruthInfo {
    std::vector<std::vector<int>> monomial_exponents;  // original input space
};

TruthInfo load_truth(const std::string& meta_path) {
    std::ifstream stream(meta_path);
    if (!stream) throw data_error("cannot open meta file: " + meta_path);
    json meta;
    stream >> meta;
    TruthInfo truth;
    for (const auto& entry : meta.at("true_monomials"))
        truth.monomial_exponents.push_back(entry.at("exponents").get<std::vector<int>>());
    return truth;
}

int cmd_fit(const std::string& in, const std::string& response, const std::string& synth_spec,
            const std::string& method, int r, int k, int l, const std::string& gamma_flag,
            double gamma_scale, double time_limit, long node_limit, double rel_gap, int p_prime,
            const std::string& test_in, const std::string& meta_path,
            const std::string& model_out, const std::string& diag_out, bool unit_scale) {
    const InputData data = load_input(in, response, synth_spec, unit_scale);
    const int p = static_cast<int>(data.X.cols());

    // Optional ranking preselection.
    std::vector<int> selected_inputs(static_cast<std::size_t>(p));
    std::iota(selected_inputs.begin(), selected_inputs.end(), 0);
    Matrix X_work = data.X;
    if (p_prime > 0 && p_prime < p) {
        const InputRanking ranking =
            rank_inputs(data.X, data.Y, r, default_ranking_gamma(data.Y));
        selected_inputs = select_top(ranking, p_prime);
        X_work.resize(data.X.rows(), p_prime);
        for (int c = 0; c < p_prime; ++c)
            X_work.col(c) = data.X.col(selected_inputs[static_cast<std::size_t>(c)]);
    }
    const int p_work = static_cast<int>(X_work.cols());

    const double gamma = resolve_gamma_flag(gamma_flag, X_work, method == "ridge" ? 1 : r,
                                            gamma_scale);
    SolveLimits limits;
    limits.time_limit_seconds = time_limit;
    limits.node_limit = node_limit;
    limits.rel_gap = rel_gap;

    FitModel model;
    std::optional<SparseFit> sparse_fit;
    if (method == "exact") {
        const BasisCatalog catalog(p_work, r);
        if (k <= 0 || k > p_work) k = p_work;
        if (l <= 0 || l > catalog.f()) throw argument_error("--l is required for method exact");
        model = fit_exact(catalog, X_work, data.Y, k, l, gamma, limits);
    } else if (method == "lasso") {
        const BasisCatalog catalog(p_work, r);
        if (l <= 0 || l > catalog.f()) throw argument_error("--l is required for method lasso");
        model = fit_lasso(catalog, X_work, data.Y, l, gamma);
    } else if (method == "kernel-ridge") {
        model = fit_kernel_ridge(X_work, data.Y, r, gamma);
    } else if (method == "ridge") {
        model = fit_kernel_ridge(X_work, data.Y, 1, gamma);
    } else {
        throw argument_error("unknown method: " + method);
    }

    // Report.
    std::cout << "method=" << model.method << " n=" << data.X.rows() << " p=" << p
              << " p_work=" << p_work << " r=" << model.r << " gamma=" << gamma << "\n";
    if (model.diagnostics) {
        const SolveDiagnostics& diag = *model.diagnostics;
        std::cout << "objective=" << diag.objective << " cuts=" << diag.cuts
                  << " nodes=" << diag.nodes << " wall=" << diag.wall_seconds
                  << "s termination=" << to_string(diag.termination);
        if (diag.termination != Termination::converged)
            std::cout << " (NOT proven optimal, gap=" << diag.gap << ")";
        std::cout << "\n";
        if (!diag_out.empty()) {
            CsvWriter writer(diag_out);
            writer.raw_line(diagnostics_csv_header());
            writer.raw_line(diagnostics_csv_row(diag));
        }
    }
    if (!model.support.empty()) {
        const BasisCatalog catalog(p_work, r);
        std::cout << "support (" << model.support.size() << " monomials):";
        for (std::size_t c = 0; c < model.support.size(); ++c) {
            const auto& exponents = catalog.monomial(model.support[c]).exponents;
            std::cout << " [";
            bool first = true;
            for (std::size_t i = 0; i < exponents.size(); ++i) {
                if (exponents[i] == 0) continue;
                if (!first) std::cout << " ";
                std::cout << "x" << selected_inputs[i] + 1;
                if (exponents[i] > 1) std::cout << "^" << exponents[i];
                first = false;
            }
            if (first) std::cout << "1";
            std::cout << "]*" << format_double(model.coefficients[static_cast<Index>(c)], 6);
        }
        std::cout << "\n";
    }

    // Accuracy metrics against a generator meta record or in-process truth.
    std::vector<std::vector<int>> truth_exponents;
    if (!meta_path.empty())
        truth_exponents = load_truth(meta_path).monomial_exponents;
    else if (data.instance) {
        const BasisCatalog full(data.instance->p, data.instance->r);
        for (int j : data.instance->true_monomials)
            truth_exponents.push_back(full.monomial(j).exponents);
    }
    if (!truth_exponents.empty() && (method == "exact" || method == "lasso")) {
        // Compare in the original input space via exponent vectors.
        const BasisCatalog catalog(p_work, r);
        std::map<std::vector<int>, int> truth_ids;
        for (const auto& exponents : truth_exponents)
            truth_ids.emplace(exponents, static_cast<int>(truth_ids.size()));
        std::vector<int> truth_indices;
        for (const auto& [ignored, id] : truth_ids) truth_indices.push_back(id);
        std::vector<int> found;
        int spurious_id = static_cast<int>(truth_ids.size());
        for (int j : model.support) {
            std::vector<int> exponents(static_cast<std::size_t>(p), 0);
            const auto& local = catalog.monomial(j).exponents;
            for (std::size_t c = 0; c < local.size(); ++c)
                exponents[static_cast<std::size_t>(selected_inputs[c])] = local[c];
            const auto it = truth_ids.find(exponents);
            found.push_back(it != truth_ids.end() ? it->second : spurious_id++);
        }
        std::cout << "accuracy_pct=" << accuracy_pct(found, truth_indices)
                  << " false_alarm_pct=" << false_alarm_pct(found, truth_indices) << "\n";
    }

    if (!test_in.empty()) {
        const Dataset test = load_csv(test_in, response);
        Matrix X_test = test.X;
        if (!unit_scale)
            for (std::size_t c = 0; c < test.input_norms.size(); ++c)
                X_test.col(static_cast<Index>(c)) *= test.input_norms[c];
        if (X_test.cols() != p) throw data_error("--test-in column count differs from --in");
        Matrix X_test_work(X_test.rows(), p_work);
        for (int c = 0; c < p_work; ++c)
            X_test_work.col(c) = X_test.col(selected_inputs[static_cast<std::size_t>(c)]);
        std::cout << "test_error=" << test_error(model.predict(X_test_work), test.Y) << "\n";
    }

    if (!model_out.empty()) {
        json out;
        out["version"] = kVersion;
        out["method"] = model.method;
        out["r"] = model.r;
        out["gamma"] = model.gamma;
        out["p"] = p;
        json sel = json::array();
        for (int i : selected_inputs) sel.push_back(i + 1);
        out["selected_inputs"] = sel;
        if (model.method == "exact" || model.method == "lasso") {
            const BasisCatalog catalog(p_work, r);
            json support = json::array();
            for (std::size_t c = 0; c < model.support.size(); ++c) {
                json entry = monomial_json(catalog, model.support[c], selected_inputs, p);
                entry["coefficient"] = model.coefficients[static_cast<Index>(c)];
                support.push_back(entry);
            }
            out["support"] = support;
            if (model.diagnostics) {
                out["objective"] = model.diagnostics->objective;
                out["gap"] = model.diagnostics->gap;
                out["termination"] = to_string(model.diagnostics->termination);
            }
        } else {
            out["alpha"] = std::vector<double>(model.alpha.data(),
                                               model.alpha.data() + model.alpha.size());
            json rows = json::array();
            for (Index t = 0; t < model.X_train.rows(); ++t) {
                json row = json::array();
                for (Index c = 0; c < model.X_train.cols(); ++c)
                    row.push_back(model.X_train(t, c));
                rows.push_back(row);
            }
            out["X_train"] = rows;
        }
        std::ofstream stream(model_out);
        if (!stream) throw data_error("cannot write model file: " + model_out);
        stream << out.dump(2) << '\n';
        std::cout << "model -> " << model_out << "\n";
    }
    return 0;
}

// ----------------------------------------------------------- experiment ----

int cmd_experiment(const std::string& config_path, const std::vector<std::string>& overrides,
                   const std::string& out) {
    KvConfig kv = config_path.empty() ? KvConfig() : KvConfig::from_file(config_path);
    for (const std::string& assignment : overrides) kv.set(assignment);
    const ExperimentConfig config = ExperimentConfig::from_kv(kv);

    CsvWriter writer(out);
    write_provenance(writer, "experiment", kv);
    writer.raw_line(ExperimentRow::csv_header());
    long rows = 0;
    run_experiment(config, [&](const ExperimentRow& row) {
        writer.raw_line(row.csv_row());
        ++rows;
    });
    std::cout << "experiment '" << config.kind << "' wrote " << rows << " rows -> " << out << "\n";
    return 0;
}

// ------------------------------------------------------------ summarize ----

int cmd_summarize(const std::string& in, const std::string& out,
                  const std::string& group_by_flag) {
    CsvReader reader(in);
    std::vector<std::string> header;
    long line = 0;
    if (!reader.next(header, line)) throw data_error("empty results file: " + in);

    std::vector<std::string> group_by;
    {
        std::istringstream tokens(group_by_flag);
        std::string token;
        while (std::getline(tokens, token, ',')) group_by.push_back(token);
    }
    std::vector<long> group_cols;
    for (const std::string& name : group_by) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw data_error("group-by column not found: " + name);
        group_cols.push_back(it - header.begin());
    }
    const std::vector<std::string> metrics = {
        "accuracy_pct", "false_alarm_pct", "test_error",    "support_size",
        "objective",    "wall_seconds",    "cuts",          "nodes",
        "min_pprime_cover"};
    std::vector<long> metric_cols;
    for (const std::string& name : metrics) {
        const auto it = std::find(header.begin(), header.end(), name);
        metric_cols.push_back(it == header.end() ? -1 : it - header.begin());
    }
    const auto error_it = std::find(header.begin(), header.end(), "error");
    const long error_col = error_it == header.end() ? -1 : error_it - header.begin();

    struct Accumulator {
        long count = 0;
        std::vector<long> metric_count;
        std::vector<double> sum, sum_sq;
    };
    std::map<std::vector<std::string>, Accumulator> groups;
    std::vector<std::string> fields;
    while (reader.next(fields, line)) {
        if (fields.size() != header.size())
            throw data_error("ragged results row", line);
        if (error_col >= 0 && !fields[static_cast<std::size_t>(error_col)].empty()) continue;
        std::vector<std::string> key;
        for (long c : group_cols) key.push_back(fields[static_cast<std::size_t>(c)]);
        Accumulator& acc = groups[key];
        if (acc.metric_count.empty()) {
            acc.metric_count.assign(metrics.size(), 0);
            acc.sum.assign(metrics.size(), 0.0);
            acc.sum_sq.assign(metrics.size(), 0.0);
        }
        ++acc.count;
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            if (metric_cols[m] < 0) continue;
            const std::string& cell = fields[static_cast<std::size_t>(metric_cols[m])];
            if (cell.empty()) continue;
            double value;
            try {
                value = parse_double(cell, line, metric_cols[m] + 1);
            } catch (const data_error&) {
                continue;
            }
            if (value < 0.0) continue;  // sentinel for not-applicable
            ++acc.metric_count[m];
            acc.sum[m] += value;
            acc.sum_sq[m] += value * value;
        }
    }

    CsvWriter writer(out);
    writer.comment("hspoly " + std::string(kVersion) + " summarize of " + in);
    std::string out_header;
    for (const std::string& name : group_by) out_header += name + ",";
    out_header += "rows";
    for (const std::string& name : metrics)
        out_header += "," + name + "_mean," + name + "_std," + name + "_count";
    writer.raw_line(out_header);
    for (const auto& [key, acc] : groups) {
        std::string row;
        for (const std::string& part : key) row += part + ",";
        row += std::to_string(acc.count);
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            const long c = acc.metric_count[m];
            if (c == 0) {
                row += ",,,0";
                continue;
            }
            const double mean = acc.sum[m] / static_cast<double>(c);
            const double variance =
                std::max(0.0, acc.sum_sq[m] / static_cast<double>(c) - mean * mean);
            row += "," + format_double(mean) + "," + format_double(std::sqrt(variance)) + "," +
                   std::to_string(c);
        }
        writer.raw_line(row);
    }
    std::cout << "summary of " << groups.size() << " cells -> " << out << "\n";
    return 0;
}

// ------------------------------------------------------------- validate ----

int cmd_validate(const std::string& in, const std::string& response, const std::string& method,
                 int folds, const std::string& r_grid_flag, const std::string& k_grid_flag,
                 const std::string& l_grid_flag, const std::string& gamma_grid_flag, int p_prime,
                 std::uint64_t seed, double time_limit, const std::string& out) {
    const Dataset dataset = load_csv(in, response);
    const long n = dataset.X.rows();
    const int p = static_cast<int>(dataset.X.cols());

    KvConfig grids;
    grids.set("r_grid", r_grid_flag);
    grids.set("k_grid", k_grid_flag);
    grids.set("l_grid", l_grid_flag);
    grids.set("gamma_grid", gamma_grid_flag);
    const std::vector<long> r_grid = grids.get_grid("r_grid");
    const std::vector<long> k_grid = grids.get_grid("k_grid");
    const std::vector<long> l_grid = grids.get_grid("l_grid");
    const std::vector<double> gamma_grid = grids.get_double_grid("gamma_grid");

    const std::vector<Fold> fold_list = make_folds(n, folds, seed);
    SolveLimits limits;
    limits.time_limit_seconds = time_limit;

    const auto subset_rows = [](const Matrix& X, const Vector& Y, const std::vector<int>& rows) {
        Matrix Xs(static_cast<Index>(rows.size()), X.cols());
        Vector Ys(static_cast<Index>(rows.size()));
        for (std::size_t t = 0; t < rows.size(); ++t) {
            Xs.row(static_cast<Index>(t)) = X.row(rows[t]);
            Ys[static_cast<Index>(t)] = Y[rows[t]];
        }
        return std::make_pair(Xs, Ys);
    };

    KvConfig provenance = grids;
    provenance.set("method", method);
    provenance.set("folds", std::to_string(folds));
    provenance.set("p_prime", std::to_string(p_prime));
    provenance.set("seed", std::to_string(seed));
    CsvWriter writer(out);
    write_provenance(writer, "validate", provenance);
    writer.raw_line("fold,r_star,k_star,l_star,gamma_star,validation_te,test_te,error");

    double total_test_te = 0.0;
    long scored_folds = 0;
    std::map<std::string, int> chosen_counts;
    for (std::size_t fold_id = 0; fold_id < fold_list.size(); ++fold_id) {
        const Fold& fold = fold_list[fold_id];
        try {
            const auto [X_train, Y_train] = subset_rows(dataset.X, dataset.Y, fold.train);
            const auto [X_val, Y_val] = subset_rows(dataset.X, dataset.Y, fold.validation);
            const auto [X_test, Y_test] = subset_rows(dataset.X, dataset.Y, fold.test);

            // Ranking preselection on the training block only.
            std::vector<int> selected(static_cast<std::size_t>(p));
            std::iota(selected.begin(), selected.end(), 0);
            Matrix Xtr = X_train, Xva = X_val, Xte = X_test;
            if (p_prime > 0 && p_prime < p) {
                const int r_rank = static_cast<int>(r_grid.back());
                const InputRanking ranking =
                    rank_inputs(X_train, Y_train, r_rank, default_ranking_gamma(Y_train));
                selected = select_top(ranking, p_prime);
                const auto take = [&](const Matrix& src) {
                    Matrix dst(src.rows(), static_cast<Index>(selected.size()));
                    for (std::size_t c = 0; c < selected.size(); ++c)
                        dst.col(static_cast<Index>(c)) = src.col(selected[c]);
                    return dst;
                };
                Xtr = take(X_train);
                Xva = take(X_val);
                Xte = take(X_test);
            }
            const int p_work = static_cast<int>(Xtr.cols());

            double best_te = std::numeric_limits<double>::infinity();
            FitModel best_model;
            long best_r = 0, best_k = 0, best_l = 0;
            double best_gamma = 0.0;
            for (long r : r_grid) {
                const BasisCatalog catalog(p_work, static_cast<int>(r));
                for (double gamma : gamma_grid) {
                    if (method == "kernel-ridge" || method == "ridge") {
                        const FitModel model = fit_kernel_ridge(
                            Xtr, Y_train, method == "ridge" ? 1 : static_cast<int>(r), gamma);
                        const double te = test_error(model.predict(Xva), Y_val);
                        if (te < best_te) {
                            best_te = te;
                            best_model = model;
                            best_r = model.r;
                            best_k = p_work;
                            best_l = 0;
                            best_gamma = gamma;
                        }
                        continue;
                    }
                    for (long l : l_grid) {
                        if (l > catalog.f()) continue;
                        if (method == "lasso") {
                            const FitModel model = fit_lasso(catalog, Xtr, Y_train,
                                                             static_cast<int>(l), gamma);
                            const double te = test_error(model.predict(Xva), Y_val);
                            if (te < best_te) {
                                best_te = te;
                                best_model = model;
                                best_r = r;
                                best_k = p_work;
                                best_l = l;
                                best_gamma = gamma;
                            }
                            continue;
                        }
                        for (long k : k_grid) {
                            if (k > p_work) continue;
                            const FitModel model =
                                fit_exact(catalog, Xtr, Y_train, static_cast<int>(k),
                                          static_cast<int>(l), gamma, limits);
                            const double te = test_error(model.predict(Xva), Y_val);
                            if (te < best_te) {
                                best_te = te;
                                best_model = model;
                                best_r = r;
                                best_k = k;
                                best_l = l;
                                best_gamma = gamma;
                            }
                        }
                    }
                }
            }
            const double test_te = test_error(best_model.predict(Xte), Y_test);
            total_test_te += test_te;
            ++scored_folds;
            chosen_counts["r=" + std::to_string(best_r) + ",k=" + std::to_string(best_k) +
                          ",l=" + std::to_string(best_l) +
                          ",gamma=" + format_double(best_gamma)]++;
            writer.raw_line(std::to_string(fold_id + 1) + "," + std::to_string(best_r) + "," +
                            std::to_string(best_k) + "," + std::to_string(best_l) + "," +
                            format_double(best_gamma) + "," + format_double(best_te) + "," +
                            format_double(test_te) + ",");
        } catch (const std::exception& e) {
            writer.raw_line(std::to_string(fold_id + 1) + ",,,,,,," +
                            CsvWriter::escape(e.what()));
        }
    }
    if (scored_folds > 0) {
        std::string modal;
        int modal_count = -1;
        for (const auto& [combo, count] : chosen_counts)
            if (count > modal_count) {
                modal = combo;
                modal_count = count;
            }
        const double mean_te = total_test_te / static_cast<double>(scored_folds);
        writer.comment("mean_test_te = " + format_double(mean_te));
        writer.comment("modal hyperparameters: " + modal);
        std::cout << "mean test TE over " << scored_folds << " folds: " << mean_te
                  << "\nmodal hyperparameters: " << modal << "\n-> " << out << "\n";
    } else {
        std::cout << "no fold completed; see " << out << " for per-fold errors\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical (k,l)-sparse polynomial regression toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "emit a synthetic dataset to CSV + meta JSON");
    int sp = 10, sk = 3, sl = 5, sr = 2;
    long sn = 200;
    double ssnr = 400.0;
    std::uint64_t sseed = 1;
    std::string sout = "instance.csv";
    synth->add_option("--p", sp, "input count");
    synth->add_option("--k", sk, "true input sparsity");
    synth->add_option("--l", sl, "true monomial sparsity");
    synth->add_option("--r", sr, "polynomial degree");
    synth->add_option("--n", sn, "sample count");
    synth->add_option("--snr", ssnr, "signal-to-noise ratio ||S||^2/||E||^2 (inf for noiseless)");
    synth->add_option("--seed", sseed, "generator seed");
    synth->add_option("--out", sout, "output CSV path")->required();

    // rank
    auto* rank = app.add_subcommand("rank", "rank inputs by kernel-ridge coefficient mass");
    std::string rin, rresponse = "y", rsynth, rgamma = "auto", rout = "ranking.csv";
    int rr = 2, rpprime = 0;
    bool rnoscale = false;
    rank->add_option("--in", rin, "input CSV");
    rank->add_option("--response", rresponse, "response column name");
    rank->add_option("--synth", rsynth, "synthetic spec, e.g. p=50,k=5,l=10,r=2,n=500,seed=1");
    rank->add_option("--r", rr, "polynomial degree");
    rank->add_option("--gamma", rgamma, "ridge weight ('auto' = 1/(n Var(Y)))");
    rank->add_option("--p-prime", rpprime, "how many inputs to mark selected (default all)");
    rank->add_option("--out", rout, "output CSV path");
    rank->add_flag("--no-scale", rnoscale, "skip unit-norm input scaling for CSV input");

    // fit
    auto* fit = app.add_subcommand("fit", "fit one model (exact, lasso, kernel-ridge, ridge)");
    std::string fin, fresponse = "y", fsynth, fmethod = "exact", fgamma = "auto";
    std::string ftest, fmeta, fmodel, fdiag;
    int fr = 2, fk = 0, fl = 0, fpprime = 0;
    double fgscale = 100.0, ftime = 120.0, fgap = 1e-6;
    long fnodes = -1;
    bool fnoscale = false;
    fit->add_option("--in", fin, "training CSV");
    fit->add_option("--response", fresponse, "response column name");
    fit->add_option("--synth", fsynth, "synthetic spec (alternative to --in)");
    fit->add_option("--method", fmethod, "exact | lasso | kernel-ridge | ridge");
    fit->add_option("--r", fr, "polynomial degree");
    fit->add_option("--k", fk, "input budget (exact; default p)");
    fit->add_option("--l", fl, "monomial budget (exact, lasso)");
    fit->add_option("--gamma", fgamma, "ridge weight ('auto' = scale rule)");
    fit->add_option("--gamma-scale", fgscale, "scale constant for gamma=auto");
    fit->add_option("--time-limit", ftime, "solver time limit in seconds");
    fit->add_option("--node-limit", fnodes, "solver node limit (-1 = unlimited)");
    fit->add_option("--gap", fgap, "solver relative optimality gap");
    fit->add_option("--p-prime", fpprime, "rank inputs first and keep the top p'");
    fit->add_option("--test-in", ftest, "held-out CSV for test error");
    fit->add_option("--meta", fmeta, "generator meta JSON for accuracy metrics");
    fit->add_option("--model-out", fmodel, "write the fitted model as JSON");
    fit->add_option("--diag-out", fdiag, "write solver diagnostics CSV (exact only)");
    fit->add_flag("--no-scale", fnoscale, "skip unit-norm input scaling for CSV input");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run a configured experiment grid");
    std::string econfig, eout = "results.csv";
    std::vector<std::string> esets;
    experiment->add_option("--config", econfig, "key = value config file");
    experiment->add_option("--set", esets, "config overrides, key=value (repeatable)");
    experiment->add_option("--out", eout, "raw results CSV path");

    // summarize
    auto* summarize = app.add_subcommand("summarize", "aggregate a raw results CSV");
    std::string min = "results.csv", mout = "summary.csv";
    std::string mgroup = "kind,n,p,p_prime,r,k,l,method";
    summarize->add_option("--in", min, "raw results CSV");
    summarize->add_option("--out", mout, "summary CSV path");
    summarize->add_option("--group-by", mgroup, "comma list of grouping columns");

    // validate
    auto* validate = app.add_subcommand("validate", "fold-based hyperparameter selection");
    std::string vin, vresponse = "y", vmethod = "exact", vout = "validation.csv";
    std::string vrgrid = "1:3", vkgrid = "1:5", vlgrid = "1,2,5,10,20", vggrid = "0.01,0.1,1,10";
    int vfolds = 10, vpprime = 20;
    std::uint64_t vseed = 1;
    double vtime = 120.0;
    validate->add_option("--in", vin, "dataset CSV")->required();
    validate->add_option("--response", vresponse, "response column name");
    validate->add_option("--method", vmethod, "exact | lasso | kernel-ridge | ridge");
    validate->add_option("--folds", vfolds, "number of 80/10/10 folds");
    validate->add_option("--r-grid", vrgrid, "degree grid");
    validate->add_option("--k-grid", vkgrid, "input budget grid (exact)");
    validate->add_option("--l-grid", vlgrid, "monomial budget grid");
    validate->add_option("--gamma-grid", vggrid, "ridge weight grid");
    validate->add_option("--p-prime", vpprime, "ranking preselection size");
    validate->add_option("--seed", vseed, "fold shuffle seed");
    validate->add_option("--time-limit", vtime, "per-solve time limit (exact)");
    validate->add_option("--out", vout, "per-fold report CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(sp, sk, sl, sr, sn, ssnr, sseed, sout);
        if (rank->parsed())
            return cmd_rank(rin, rresponse, rsynth, rr, rgamma, rpprime, rout, !rnoscale);
        if (fit->parsed())
            return cmd_fit(fin, fresponse, fsynth, fmethod, fr, fk, fl, fgamma, fgscale, ftime,
                           fnodes, fgap, fpprime, ftest, fmeta, fmodel, fdiag, !fnoscale);
        if (experiment->parsed()) return cmd_experiment(econfig, esets, eout);
        if (summarize->parsed()) return cmd_summarize(min, mout, mgroup);
        if (validate->parsed())
            return cmd_validate(vin, vresponse, vmethod, vfolds, vrgrid, vkgrid, vlgrid, vggrid,
                                vpprime, vseed, vtime, vout);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const capacity_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const argument_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
