#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hspoly/config.hpp"
#include "hspoly/csv.hpp"
#include "hspoly/data.hpp"
#include "hspoly/methods.hpp"
#include "hspoly/types.hpp"

namespace hspoly {

/// One experiment result row: a (cell, seed, method) triple.
struct ExperimentRow {
    std::string kind;
    long n = 0;
    int p = 0, p_prime = 0, r = 0;
    int k_true = 0, l_true = 0;
    int k = 0, l = 0;
    double snr = 0.0, gamma = 0.0;
    std::uint64_t seed = 0;
    std::string method;
    double accuracy = -1.0, false_alarm = -1.0, te = -1.0;
    int support_size = -1;
    double objective = -1.0, wall_seconds = -1.0;
    long cuts = -1, nodes = -1;
    std::string termination;
    int min_pprime_cover = -1;
    std::string error;

    static std::string csv_header() {
        return "kind,n,p,p_prime,r,k_true,l_true,k,l,snr,gamma,seed,method,accuracy_pct,"
               "false_alarm_pct,test_error,support_size,objective,wall_seconds,cuts,nodes,"
               "termination,min_pprime_cover,error";
    }

    std::string csv_row() const {
        std::ostringstream out;
        out.precision(12);
        out << kind << ',' << n << ',' << p << ',' << p_prime << ',' << r << ',' << k_true << ','
            << l_true << ',' << k << ',' << l << ',' << snr << ',' << gamma << ',' << seed << ','
            << method << ',' << accuracy << ',' << false_alarm << ',' << te << ',' << support_size
            << ',' << objective << ',' << wall_seconds << ',' << cuts << ',' << nodes << ','
            << termination << ',' << min_pprime_cover << ',' << CsvWriter::escape(error);
        return out.str();
    }
};

using RowSink = std::function<void(const ExperimentRow&)>;

namespace detail {

/// Run `count` independent tasks on `jobs` workers; each task returns its rows,
/// which are handed to the sink in task order regardless of completion order.
inline void run_ordered(std::size_t count, int jobs,
                        const std::function<std::vector<ExperimentRow>(std::size_t)>& task,
                        const RowSink& sink) {
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (std::size_t id = 0; id < count; ++id)
            for (const ExperimentRow& row : task(id)) sink(row);
        return;
    }
    std::mutex mutex;
    std::condition_variable cv;
    std::map<std::size_t, std::vector<ExperimentRow>> done;
    std::size_t next_to_emit = 0;
    std::atomic<std::size_t> next_task{0};

    const auto worker = [&] {
        for (;;) {
            const std::size_t id = next_task.fetch_add(1);
            if (id >= count) return;
            std::vector<ExperimentRow> rows = task(id);
            std::unique_lock<std::mutex> lock(mutex);
            done.emplace(id, std::move(rows));
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);

    {
        std::unique_lock<std::mutex> lock(mutex);
        while (next_to_emit < count) {
            cv.wait(lock, [&] { return done.count(next_to_emit) > 0; });
            while (true) {
                const auto it = done.find(next_to_emit);
                if (it == done.end()) break;
                std::vector<ExperimentRow> rows = std::move(it->second);
                done.erase(it);
                lock.unlock();
                for (const ExperimentRow& row : rows) sink(row);
                ++next_to_emit;
                lock.lock();
            }
        }
    }
    for (std::thread& t : pool) t.join();
}

inline double resolve_gamma(const Matrix& X_train, int r, bool gamma_is_auto, double gamma_value,
                            double gamma_scale) {
    return gamma_is_auto ? auto_gamma(X_train, r, gamma_scale) : gamma_value;
}

}  // namespace detail

/// Shared experiment settings parsed from a KvConfig.
struct ExperimentConfig {
    std::string kind;
    int p = 10, p_prime = 10, r = 2;
    int k_true = 10, l_true = 8;
    int k = 10, l = 8;
    double snr = 400.0;
    long n = 150;
    std::vector<long> n_grid, l_grid, p_grid;
    int seeds = 10;
    std::uint64_t seed_base = 1;
    long test_n = 200;
    int jobs = 1;
    bool run_exact = true, run_lasso = true;
    bool gamma_is_auto = true;
    double gamma_value = 1.0;
    double gamma_scale = 100.0;
    double ranking_gamma = 0.0;  ///< 0 means the scale-free default per instance
    SolveLimits limits;

    static ExperimentConfig from_kv(const KvConfig& kv) {
        ExperimentConfig cfg;
        cfg.kind = kv.require("kind");
        if (cfg.kind != "phase" && cfg.kind != "path" && cfg.kind != "coverage")
            throw argument_error("unknown experiment kind: " + cfg.kind);
        cfg.p = static_cast<int>(kv.get_long("p", 10));
        cfg.p_prime = static_cast<int>(kv.get_long("p_prime", cfg.p));
        cfg.r = static_cast<int>(kv.get_long("r", 2));
        cfg.k_true = static_cast<int>(kv.get_long("k_true", cfg.p));
        cfg.l_true = static_cast<int>(kv.get_long("l_true", 8));
        cfg.k = static_cast<int>(kv.get_long("k", cfg.p_prime));
        cfg.l = static_cast<int>(kv.get_long("l", cfg.l_true));
        cfg.snr = kv.get_double("snr", 400.0);
        cfg.n = kv.get_long("n", 150);
        if (kv.has("n_grid")) cfg.n_grid = kv.get_grid("n_grid");
        if (kv.has("l_grid")) cfg.l_grid = kv.get_grid("l_grid");
        if (kv.has("p_grid")) cfg.p_grid = kv.get_grid("p_grid");
        cfg.seeds = static_cast<int>(kv.get_long("seeds", 10));
        cfg.seed_base = static_cast<std::uint64_t>(kv.get_long("seed_base", 1));
        cfg.test_n = kv.get_long("test_n", 200);
        cfg.jobs = static_cast<int>(kv.get_long("jobs", 1));
        const std::string methods = kv.get("methods", "exact,lasso");
        cfg.run_exact = methods.find("exact") != std::string::npos;
        cfg.run_lasso = methods.find("lasso") != std::string::npos;
        const std::string gamma = kv.get("gamma", "auto");
        if (gamma == "auto") {
            cfg.gamma_is_auto = true;
        } else {
            cfg.gamma_is_auto = false;
            cfg.gamma_value = kv.get_double("gamma", 1.0);
        }
        cfg.gamma_scale = kv.get_double("gamma_scale", 100.0);
        cfg.ranking_gamma = kv.get_double("ranking_gamma", 0.0);
        cfg.limits.time_limit_seconds = kv.get_double("time_limit", 120.0);
        cfg.limits.node_limit = kv.get_long("node_limit", -1);
        cfg.limits.rel_gap = kv.get_double("rel_gap", 1e-6);
        if (cfg.seeds < 1) throw argument_error("experiment: require seeds >= 1");
        if (cfg.test_n < 1) throw argument_error("experiment: require test_n >= 1");
        return cfg;
    }
};

namespace detail {

struct SplitInstance {
    SyntheticInstance instance;
    Matrix X_train, X_test;
    Vector Y_train, Y_test;
};

inline SplitInstance gen_split(int p, int k_true, int l_true, int r, long n, long test_n,
                               double snr, std::uint64_t seed) {
    SplitInstance split;
    split.instance = gen_synthetic(p, k_true, l_true, r, n + test_n, snr, seed);
    split.X_train = split.instance.X.topRows(n);
    split.Y_train = split.instance.Y.head(n);
    split.X_test = split.instance.X.bottomRows(test_n);
    split.Y_test = split.instance.Y.tail(test_n);
    return split;
}

inline ExperimentRow base_row(const ExperimentConfig& cfg, long n, std::uint64_t seed) {
    ExperimentRow row;
    row.kind = cfg.kind;
    row.n = n;
    row.p = cfg.p;
    row.p_prime = cfg.p_prime;
    row.r = cfg.r;
    row.k_true = cfg.k_true;
    row.l_true = cfg.l_true;
    row.k = cfg.k;
    row.l = cfg.l;
    row.snr = cfg.snr;
    row.seed = seed;
    return row;
}

inline void fill_exact(ExperimentRow& row, const BasisCatalog& catalog, const SplitInstance& data,
                       int k, int l, double gamma, const SolveLimits& limits) {
    row.method = "exact";
    row.gamma = gamma;
    const SparseFit fit = solve_hierarchical(catalog, data.X_train, data.Y_train, k, l, gamma,
                                             limits);
    row.support_size = static_cast<int>(fit.support.size());
    row.accuracy = accuracy_pct(fit.support, data.instance.true_monomials);
    row.false_alarm = false_alarm_pct(fit.support, data.instance.true_monomials);
    row.objective = fit.objective;
    row.wall_seconds = fit.diagnostics.wall_seconds;
    row.cuts = fit.diagnostics.cuts;
    row.nodes = fit.diagnostics.nodes;
    row.termination = to_string(fit.diagnostics.termination);
    Vector predictions = Vector::Zero(data.X_test.rows());
    for (std::size_t c = 0; c < fit.support.size(); ++c)
        predictions +=
            catalog.feature_column(data.X_test, fit.support[c]) * fit.coefficients[static_cast<Index>(c)];
    row.te = test_error(predictions, data.Y_test);
}

inline void fill_lasso(ExperimentRow& row, const BasisCatalog& catalog, const SplitInstance& data,
                       int target_support, double gamma) {
    row.method = "lasso";
    row.gamma = gamma;
    const auto start = std::chrono::steady_clock::now();
    const FitModel model = fit_lasso(catalog, data.X_train, data.Y_train, target_support, gamma);
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.support_size = static_cast<int>(model.support.size());
    row.accuracy = accuracy_pct(model.support, data.instance.true_monomials);
    row.false_alarm = false_alarm_pct(model.support, data.instance.true_monomials);
    row.termination = model.path_point && model.path_point->converged ? "converged"
                                                                      : "sweep_limit";
    row.te = test_error(model.predict(data.X_test), data.Y_test);
}

}  // namespace detail

/// Phase-transition experiment: exact solver and lasso baseline across an
/// n grid, fixed generator, several seeds. One row per (n, seed, method).
inline void run_phase_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
    if (cfg.n_grid.empty()) throw argument_error("phase experiment: n_grid is required");
    if (cfg.p_prime != cfg.p)
        throw argument_error("phase experiment: p_prime must equal p (no ranking step)");
    const std::size_t cells = cfg.n_grid.size() * static_cast<std::size_t>(cfg.seeds);
    const auto task = [&](std::size_t id) {
        const long n = cfg.n_grid[id / static_cast<std::size_t>(cfg.seeds)];
        const std::uint64_t seed = cfg.seed_base + id % static_cast<std::size_t>(cfg.seeds);
        std::vector<ExperimentRow> rows;
        try {
            const auto data = detail::gen_split(cfg.p, cfg.k_true, cfg.l_true, cfg.r, n,
                                                cfg.test_n, cfg.snr, seed);
            const BasisCatalog catalog(cfg.p, cfg.r);
            const double gamma = detail::resolve_gamma(data.X_train, cfg.r, cfg.gamma_is_auto,
                                                       cfg.gamma_value, cfg.gamma_scale);
            if (cfg.run_exact) {
                ExperimentRow row = detail::base_row(cfg, n, seed);
                try {
                    detail::fill_exact(row, catalog, data, cfg.k, cfg.l, gamma, cfg.limits);
                } catch (const std::exception& e) {
                    row.method = "exact";
                    row.error = e.what();
                }
                rows.push_back(row);
            }
            if (cfg.run_lasso) {
                ExperimentRow row = detail::base_row(cfg, n, seed);
                try {
                    detail::fill_lasso(row, catalog, data, cfg.l, gamma);
                } catch (const std::exception& e) {
                    row.method = "lasso";
                    row.error = e.what();
                }
                rows.push_back(row);
            }
        } catch (const std::exception& e) {
            ExperimentRow row = detail::base_row(cfg, n, seed);
            row.method = "generator";
            row.error = e.what();
            rows.push_back(row);
        }
        return rows;
    };
    detail::run_ordered(cells, cfg.jobs, task, sink);
}

/// Accuracy / false-alarm path: sweep the requested support size l at fixed n.
inline void run_path_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
    if (cfg.l_grid.empty()) throw argument_error("path experiment: l_grid is required");
    if (cfg.p_prime != cfg.p)
        throw argument_error("path experiment: p_prime must equal p (no ranking step)");
    const std::size_t cells = cfg.l_grid.size() * static_cast<std::size_t>(cfg.seeds);
    const auto task = [&](std::size_t id) {
        const int l_requested =
            static_cast<int>(cfg.l_grid[id / static_cast<std::size_t>(cfg.seeds)]);
        const std::uint64_t seed = cfg.seed_base + id % static_cast<std::size_t>(cfg.seeds);
        std::vector<ExperimentRow> rows;
        try {
            const auto data = detail::gen_split(cfg.p, cfg.k_true, cfg.l_true, cfg.r, cfg.n,
                                                cfg.test_n, cfg.snr, seed);
            const BasisCatalog catalog(cfg.p, cfg.r);
            const double gamma = detail::resolve_gamma(data.X_train, cfg.r, cfg.gamma_is_auto,
                                                       cfg.gamma_value, cfg.gamma_scale);
            if (cfg.run_exact) {
                ExperimentRow row = detail::base_row(cfg, cfg.n, seed);
                row.l = l_requested;
                try {
                    detail::fill_exact(row, catalog, data, cfg.k, l_requested, gamma, cfg.limits);
                } catch (const std::exception& e) {
                    row.method = "exact";
                    row.error = e.what();
                }
                rows.push_back(row);
            }
            if (cfg.run_lasso) {
                ExperimentRow row = detail::base_row(cfg, cfg.n, seed);
                row.l = l_requested;
                try {
                    detail::fill_lasso(row, catalog, data, l_requested, gamma);
                } catch (const std::exception& e) {
                    row.method = "lasso";
                    row.error = e.what();
                }
                rows.push_back(row);
            }
        } catch (const std::exception& e) {
            ExperimentRow row = detail::base_row(cfg, cfg.n, seed);
            row.l = l_requested;
            row.method = "generator";
            row.error = e.what();
            rows.push_back(row);
        }
        return rows;
    };
    detail::run_ordered(cells, cfg.jobs, task, sink);
}

/// Ranking coverage: the smallest p' whose top-ranked inputs contain every
/// true input, per (p, n, seed) cell.
inline void run_coverage_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
    if (cfg.p_grid.empty() || cfg.n_grid.empty())
        throw argument_error("coverage experiment: p_grid and n_grid are required");
    const std::size_t per_p = cfg.n_grid.size() * static_cast<std::size_t>(cfg.seeds);
    const std::size_t cells = cfg.p_grid.size() * per_p;
    const auto task = [&](std::size_t id) {
        const int p = static_cast<int>(cfg.p_grid[id / per_p]);
        const std::size_t rest = id % per_p;
        const long n = cfg.n_grid[rest / static_cast<std::size_t>(cfg.seeds)];
        const std::uint64_t seed = cfg.seed_base + rest % static_cast<std::size_t>(cfg.seeds);
        ExperimentRow row = detail::base_row(cfg, n, seed);
        row.p = p;
        row.p_prime = -1;
        row.method = "ranking";
        try {
            const SyntheticInstance instance =
                gen_synthetic(p, cfg.k_true, cfg.l_true, cfg.r, n, cfg.snr, seed);
            const double gamma =
                cfg.ranking_gamma > 0.0 ? cfg.ranking_gamma : default_ranking_gamma(instance.Y);
            row.gamma = gamma;
            const auto start = std::chrono::steady_clock::now();
            const InputRanking ranking = rank_inputs(instance.X, instance.Y, cfg.r, gamma);
            row.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            row.min_pprime_cover = covering_p_prime(ranking, instance.true_inputs);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return std::vector<ExperimentRow>{row};
    };
    detail::run_ordered(cells, cfg.jobs, task, sink);
}

inline void run_experiment(const ExperimentConfig& cfg, const RowSink& sink) {
    if (cfg.kind == "phase") return run_phase_experiment(cfg, sink);
    if (cfg.kind == "path") return run_path_experiment(cfg, sink);
    if (cfg.kind == "coverage") return run_coverage_experiment(cfg, sink);
    throw argument_error("unknown experiment kind: " + cfg.kind);
}

}  // namespace hspoly
