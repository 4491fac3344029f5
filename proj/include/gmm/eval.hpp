#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gmm/dataset.hpp"
#include "gmm/error.hpp"
#include "gmm/models.hpp"
#include "gmm/parallel.hpp"
#include "gmm/rng.hpp"

namespace gmm {

inline std::vector<double> pow2_range(int lo, int hi) {
    std::vector<double> out;
    for (int i = lo; i <= hi; ++i) out.push_back(std::ldexp(1.0, i));
    return out;
}

/// Hyperparameter search lists. Defaults follow the benchmark protocol:
/// tradeoff parameters over powers of two -8..7, kernel/influence widths over
/// -10..5, plus the dedicated ball/triangular/knn lists.
struct grid_spec {
    std::vector<double> C = pow2_range(-8, 7);
    std::vector<double> lambda = pow2_range(-8, 7);
    std::vector<double> tau = pow2_range(-8, 7);
    std::vector<double> sigma = pow2_range(-10, 5);
    std::vector<double> epsilon = {5, 1, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001};
    std::vector<double> rho = pow2_range(-10, 10);
    std::vector<std::size_t> k = {1, 2, 3, 4, 5, 6, 7};

    void validate() const {
        auto positive = [](const std::vector<double>& v, const char* name) {
            if (v.empty()) throw domain_error(std::string("grid list '") + name + "' is empty");
            for (const double x : v)
                if (!(x > 0.0) || !std::isfinite(x))
                    throw domain_error(std::string("grid list '") + name + "' must be positive and finite");
        };
        positive(C, "C");
        positive(lambda, "lambda");
        positive(tau, "tau");
        positive(sigma, "sigma");
        positive(epsilon, "epsilon");
        positive(rho, "rho");
        if (k.empty()) throw domain_error("grid list 'k' is empty");
        for (const std::size_t kk : k)
            if (kk < 1) throw domain_error("grid list 'k' must contain integers >= 1");
    }
};

/// One line of an experiment table. Accuracies are percentages; std is the
/// population standard deviation over repetitions (folds, reps).
struct result_row {
    std::string setting;  // leading column: dataset or protocol cell ("m=50", "f=0.05")
    model_spec spec;
    double train_mean = 0.0;
    double train_std = 0.0;
    double test_mean = 0.0;
    double test_std = 0.0;
    std::size_t repetitions = 0;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string note;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

inline std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace detail

inline double accuracy_percent(const trained_model& model, const dataset& ds) {
    return 100.0 * (1.0 - empirical_risk(model, ds));
}

/// Canonical one-token-per-parameter description, stable across runs.
inline std::string param_string(const model_spec& spec) {
    std::string s = "kernel=" + to_string(spec.kernel.kind);
    if (spec.kernel.kind == kernel_kind::rbf) s += " sigma=" + detail::format_double("%g", spec.kernel.sigma);
    if (spec.family == model_family::svm_m && spec.memory_kernel) {
        s += " k2=" + to_string(spec.memory_kernel->kind);
        if (spec.memory_kernel->kind == kernel_kind::rbf)
            s += " sigma2=" + detail::format_double("%g", spec.memory_kernel->sigma);
        s += " tau=" + detail::format_double("%g", spec.tau);
    }
    if (spec.influence) {
        s += " influence=" + to_string(spec.influence->kind);
        switch (spec.influence->kind) {
            case influence_kind::rbf: s += " isigma=" + detail::format_double("%g", spec.influence->sigma); break;
            case influence_kind::ball: s += " epsilon=" + detail::format_double("%g", spec.influence->epsilon); break;
            case influence_kind::triangular: s += " rho=" + detail::format_double("%g", spec.influence->rho); break;
            case influence_kind::knn: s += " k=" + std::to_string(spec.influence->k); break;
            case influence_kind::identity: break;
        }
    }
    if (uses_memory(spec.family)) s += " lambda=" + detail::format_double("%g", spec.lambda);
    if (std::isfinite(spec.C)) s += " C=" + detail::format_double("%g", spec.C);
    return s;
}

struct eval_options {
    double tol = 1e-3;
    std::size_t max_passes = 1'000'000;
    bool scale = false;
    unsigned jobs = 0;  // 0: one per logical core
};

inline train_options to_train_options(const eval_options& opt) {
    train_options t;
    t.tol = opt.tol;
    t.max_passes = opt.max_passes;
    t.scale = opt.scale;
    return t;
}

struct loo_result {
    double train_mean = 0.0;
    double train_std = 0.0;
    double test_acc = 0.0;  // percent correct over the m held-out predictions
};

/// m-fold leave-one-out: fold i trains on everything but sample i and
/// predicts that sample. Training accuracy is measured per fold on its m-1
/// training rows; the test accuracy counts held-out hits over all m folds.
inline loo_result loo_evaluate(const model_spec& spec, const dataset& ds, const eval_options& options = {}) {
    const auto plans = loo_splits(ds);
    const std::size_t m = plans.size();
    std::vector<double> fold_train(m, 0.0);
    std::vector<int> hit(m, 0);
    const train_options topt = to_train_options(options);

    parallel_for(m, options.jobs, [&](std::size_t i) {
        try {
            const dataset tr = subset(ds, plans[i].train_indices);
            const trained_model model = train(spec, tr, topt);
            fold_train[i] = accuracy_percent(model, tr);
            const auto idx = static_cast<Eigen::Index>(plans[i].test_indices[0]);
            const Eigen::VectorXi label = predict(model, ds.X.row(idx));
            hit[i] = label(0) == ds.y(idx) ? 1 : 0;
        } catch (const error& e) {
            throw error("leave-one-out fold " + std::to_string(i) + ": " + e.what());
        }
    });

    loo_result out;
    out.train_mean = detail::mean_of(fold_train);
    out.train_std = detail::population_std(fold_train, out.train_mean);
    out.test_acc = 100.0 * static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
                   static_cast<double>(m);
    return out;
}

/// Train/test splits to evaluate a candidate on. When `datasets` is non-empty
/// it must parallel `splits`; split i then draws its rows from datasets[i]
/// (used by the noise protocol, where each rep trains on differently
/// corrupted labels but tests on the clean remainder).
struct holdout_protocol {
    std::vector<split_plan> splits;
    std::vector<dataset> datasets;
};

struct holdout_result {
    double train_mean = 0.0;
    double train_std = 0.0;
    double test_mean = 0.0;
    double test_std = 0.0;
};

inline holdout_result holdout_evaluate(const model_spec& spec, const dataset& ds, const holdout_protocol& protocol,
                                       const eval_options& options = {}, unsigned jobs_override = 1) {
    if (protocol.splits.empty()) throw domain_error("holdout protocol needs at least one split");
    if (!protocol.datasets.empty() && protocol.datasets.size() != protocol.splits.size())
        throw domain_error("per-split dataset list must match the split count");
    const std::size_t reps = protocol.splits.size();
    std::vector<double> train_acc(reps), test_acc(reps);
    const train_options topt = to_train_options(options);

    parallel_for(reps, jobs_override, [&](std::size_t r) {
        const dataset& source = protocol.datasets.empty() ? ds : protocol.datasets[r];
        const dataset tr = subset(source, protocol.splits[r].train_indices);
        const dataset te = subset(ds, protocol.splits[r].test_indices);
        const trained_model model = train(spec, tr, topt);
        train_acc[r] = accuracy_percent(model, tr);
        test_acc[r] = accuracy_percent(model, te);
    });

    holdout_result out;
    out.train_mean = detail::mean_of(train_acc);
    out.train_std = detail::population_std(train_acc, out.train_mean);
    out.test_mean = detail::mean_of(test_acc);
    out.test_std = detail::population_std(test_acc, out.test_mean);
    return out;
}

/// Every candidate spec for a family over the grid, in a fixed nesting order
/// (C, lambda, tau, kernel width, memory-kernel width, influence parameter,
/// each ascending) so ties resolve to the first-enumerated point.
inline std::vector<model_spec> enumerate_grid(model_family family, kernel_kind kernel,
                                              std::optional<influence_kind> influence, const grid_spec& grid) {
    grid.validate();
    if (uses_memory(family) && !influence)
        throw domain_error(to_string(family) + " grid needs an influence kind");

    const std::vector<double> one{1.0};
    const auto& c_list = family == model_family::hgmm ? one : grid.C;
    const auto& lambda_list = uses_memory(family) ? grid.lambda : one;
    const auto& tau_list = family == model_family::svm_m ? grid.tau : one;
    const auto& ksigma_list = kernel == kernel_kind::rbf ? grid.sigma : one;
    const auto& msigma_list = family == model_family::svm_m ? grid.sigma : one;

    std::vector<model_spec> out;
    for (const double C : c_list)
        for (const double lambda : lambda_list)
            for (const double tau : tau_list)
                for (const double ks : ksigma_list)
                    for (const double ms : msigma_list) {
                        model_spec base;
                        base.family = family;
                        base.kernel = kernel == kernel_kind::rbf ? kernel_spec::rbf(ks) : kernel_spec::linear();
                        base.C = family == model_family::hgmm ? unbounded : C;
                        base.lambda = lambda;
                        base.tau = tau;
                        if (family == model_family::svm_m) base.memory_kernel = kernel_spec::rbf(ms);
                        if (!uses_memory(family)) {
                            out.push_back(base);
                            continue;
                        }
                        switch (*influence) {
                            case influence_kind::rbf:
                                for (const double is : grid.sigma) {
                                    base.influence = influence_spec::rbf(is);
                                    out.push_back(base);
                                }
                                break;
                            case influence_kind::ball:
                                for (const double eps : grid.epsilon) {
                                    base.influence = influence_spec::ball(eps);
                                    out.push_back(base);
                                }
                                break;
                            case influence_kind::triangular:
                                for (const double rho : grid.rho) {
                                    base.influence = influence_spec::triangular(rho);
                                    out.push_back(base);
                                }
                                break;
                            case influence_kind::knn:
                                for (const std::size_t kk : grid.k) {
                                    base.influence = influence_spec::knn(kk);
                                    out.push_back(base);
                                }
                                break;
                            case influence_kind::identity:
                                base.influence = influence_spec::identity();
                                out.push_back(base);
                                break;
                        }
                    }
    return out;
}

namespace detail {

inline double influence_param(const model_spec& spec) {
    if (!spec.influence) return 0.0;
    switch (spec.influence->kind) {
        case influence_kind::rbf: return spec.influence->sigma;
        case influence_kind::ball: return spec.influence->epsilon;
        case influence_kind::triangular: return spec.influence->rho;
        case influence_kind::knn: return static_cast<double>(spec.influence->k);
        case influence_kind::identity: return 0.0;
    }
    return 0.0;
}

/// Selection order: higher test accuracy, then higher train accuracy, then
/// smaller C, lambda, tau, widths, influence parameter, then enumeration
/// order. Strictly total, so the winner is unique and deterministic.
inline bool better_row(const result_row& a, std::size_t ia, const result_row& b, std::size_t ib) {
    const auto key = [](const result_row& r, std::size_t i) {
        return std::make_tuple(-r.test_mean, -r.train_mean, std::isfinite(r.spec.C) ? r.spec.C : 0.0,
                               r.spec.lambda, r.spec.tau,
                               r.spec.kernel.kind == kernel_kind::rbf ? r.spec.kernel.sigma : 0.0,
                               r.spec.memory_kernel ? r.spec.memory_kernel->sigma : 0.0, influence_param(r.spec),
                               i);
    };
    return key(a, ia) < key(b, ib);
}

}  // namespace detail

enum class protocol_kind { loo, holdout };

struct grid_protocol {
    protocol_kind kind = protocol_kind::loo;
    holdout_protocol holdout;

    static grid_protocol loo() { return {}; }
    static grid_protocol over(holdout_protocol h) { return {protocol_kind::holdout, std::move(h)}; }
};

struct grid_result {
    model_spec best;
    result_row best_row;
    std::vector<result_row> table;  // one row per candidate, enumeration order
};

/// Evaluates every candidate under the protocol and keeps the full table.
/// A candidate whose training throws is recorded as a failed row and skipped
/// for selection; selection needs at least one working candidate.
inline grid_result grid_search(const std::vector<model_spec>& candidates, const dataset& ds,
                               const grid_protocol& protocol, const eval_options& options = {},
                               const std::string& setting = {}) {
    if (candidates.empty()) throw domain_error("grid search needs at least one candidate");
    std::vector<result_row> table(candidates.size());

    parallel_for(candidates.size(), options.jobs, [&](std::size_t i) {
        result_row row;
        row.setting = setting.empty() ? ds.name : setting;
        row.spec = candidates[i];
        const auto started = std::chrono::steady_clock::now();
        try {
            eval_options inner = options;
            inner.jobs = 1;  // candidates already saturate the pool
            if (protocol.kind == protocol_kind::loo) {
                const loo_result r = loo_evaluate(candidates[i], ds, inner);
                row.train_mean = r.train_mean;
                row.train_std = r.train_std;
                row.test_mean = r.test_acc;
                row.test_std = 0.0;
                row.repetitions = static_cast<std::size_t>(ds.size());
            } else {
                const holdout_result r = holdout_evaluate(candidates[i], ds, protocol.holdout, inner, 1);
                row.train_mean = r.train_mean;
                row.train_std = r.train_std;
                row.test_mean = r.test_mean;
                row.test_std = r.test_std;
                row.repetitions = protocol.holdout.splits.size();
            }
        } catch (const error& e) {
            row.failed = true;
            row.note = e.what();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        table[i] = std::move(row);
    });

    std::size_t best = table.size();
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].failed) continue;
        if (best == table.size() || detail::better_row(table[i], i, table[best], best)) best = i;
    }
    if (best == table.size()) throw error("every grid candidate failed; first failure: " + table[0].note);

    grid_result out;
    out.best = table[best].spec;
    out.best_row = table[best];
    out.table = std::move(table);
    return out;
}

/// Stratified subsampling protocol: for each requested training size, draw
/// size/2 samples per class (rep r uses seed base+r), train on them, test on
/// the remainder; the reported row is the best grid point by mean test
/// accuracy. Sizes the classes cannot fill produce a placeholder row.
inline std::vector<result_row> subsample_experiment(const std::vector<model_spec>& candidates, const dataset& ds,
                                                    const std::vector<std::size_t>& sizes, std::size_t reps,
                                                    std::uint64_t base_seed, const eval_options& options = {}) {
    ds.validate();
    if (reps < 1) throw domain_error("need at least one repetition");
    std::vector<result_row> rows;
    for (const std::size_t size : sizes) {
        const std::string setting = "m=" + std::to_string(size);
        if (size < 2 || size % 2 != 0) throw domain_error("training size must be even and >= 2, got " +
                                                          std::to_string(size));
        holdout_protocol protocol;
        try {
            for (std::size_t r = 0; r < reps; ++r) {
                split_plan plan = stratified_subsample(ds, size / 2, base_seed + r);
                plan.descriptor = "subsample-" + std::to_string(size) + "-rep-" + std::to_string(r);
                protocol.splits.push_back(std::move(plan));
            }
        } catch (const capacity_error& e) {
            result_row row;
            row.setting = setting;
            row.failed = true;
            row.note = e.what();
            rows.push_back(std::move(row));
            continue;
        }
        grid_result res = grid_search(candidates, ds, grid_protocol::over(protocol), options, setting);
        rows.push_back(std::move(res.best_row));
    }
    return rows;
}

/// Label-noise protocol: fixed-size stratified training sets (shared across
/// fractions so the zero row coincides with plain subsampling), a fraction of
/// training labels negated per rep, evaluation on the untouched remainder.
inline std::vector<result_row> noise_experiment(const std::vector<model_spec>& candidates, const dataset& ds,
                                                const std::vector<double>& fractions, std::size_t train_size,
                                                std::size_t reps, std::uint64_t base_seed,
                                                const eval_options& options = {}) {
    ds.validate();
    if (reps < 1) throw domain_error("need at least one repetition");
    if (train_size < 2 || train_size % 2 != 0)
        throw domain_error("training size must be even and >= 2, got " + std::to_string(train_size));
    if (static_cast<Eigen::Index>(train_size) >= ds.size())
        throw capacity_error("noise protocol needs more than " + std::to_string(train_size) + " samples, got " +
                             std::to_string(ds.size()));

    std::vector<split_plan> base_splits;
    for (std::size_t r = 0; r < reps; ++r) {
        split_plan plan = stratified_subsample(ds, train_size / 2, base_seed + r);
        plan.descriptor = "noise-rep-" + std::to_string(r);
        base_splits.push_back(std::move(plan));
    }

    std::vector<result_row> rows;
    for (const double f : fractions) {
        holdout_protocol protocol;
        protocol.splits = base_splits;
        for (std::size_t r = 0; r < reps; ++r) {
            dataset corrupted = ds;
            const dataset noisy_train =
                inject_label_noise(subset(ds, base_splits[r].train_indices), f, base_seed + r);
            for (std::size_t t = 0; t < base_splits[r].train_indices.size(); ++t)
                corrupted.y(static_cast<Eigen::Index>(base_splits[r].train_indices[t])) =
                    noisy_train.y(static_cast<Eigen::Index>(t));
            protocol.datasets.push_back(std::move(corrupted));
        }
        const std::string setting = "f=" + detail::format_double("%g", f);
        grid_result res = grid_search(candidates, ds, grid_protocol::over(protocol), options, setting);
        rows.push_back(std::move(res.best_row));
    }
    return rows;
}

/// Two Gaussian clusters, one per class, plus a single positive sample planted
/// at the heart of the negative cluster: the smallest dataset on which pure
/// margin maximization must sacrifice a training point while a memorizing
/// model need not.
inline dataset make_toy_dataset(std::uint64_t seed, std::size_t per_cluster = 30) {
    if (per_cluster < 1) throw domain_error("toy dataset needs at least one sample per cluster");
    auto rng = make_rng(seed);
    const auto m = static_cast<Eigen::Index>(2 * per_cluster + 1);
    dataset ds;
    ds.name = "toy";
    ds.X.resize(m, 2);
    ds.y.resize(m);
    for (std::size_t i = 0; i < per_cluster; ++i) {
        ds.X(static_cast<Eigen::Index>(i), 0) = 2.0 + 0.6 * gaussian(rng);
        ds.X(static_cast<Eigen::Index>(i), 1) = 0.6 * gaussian(rng);
        ds.y(static_cast<Eigen::Index>(i)) = 1;
    }
    for (std::size_t i = 0; i < per_cluster; ++i) {
        const auto r = static_cast<Eigen::Index>(per_cluster + i);
        ds.X(r, 0) = -2.0 + 0.6 * gaussian(rng);
        ds.X(r, 1) = 0.6 * gaussian(rng);
        ds.y(r) = -1;
    }
    ds.X(m - 1, 0) = -2.0;  // the embedded positive
    ds.X(m - 1, 1) = 0.0;
    ds.y(m - 1) = 1;
    return ds;
}

inline Eigen::Index toy_embedded_index(const dataset& toy) { return toy.size() - 1; }

/// Lattice of decision values for external plotting: x, y, g(x), label.
inline void write_decision_grid_csv(const std::filesystem::path& path, const trained_model& model, double x_lo,
                                    double x_hi, double y_lo, double y_hi, std::size_t steps) {
    if (steps < 2) throw domain_error("decision grid needs at least 2 steps per axis");
    if (model.X.cols() != 2) throw domain_error("decision grids are only defined for 2-D models");
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << "x,y,g,label\n";
    Eigen::MatrixXd probe(1, 2);
    char buf[160];
    for (std::size_t i = 0; i < steps; ++i) {
        const double px = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
        for (std::size_t j = 0; j < steps; ++j) {
            const double py = y_lo + (y_hi - y_lo) * static_cast<double>(j) / static_cast<double>(steps - 1);
            probe(0, 0) = px;
            probe(0, 1) = py;
            const double g = decision_values(model, probe)(0);
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%d\n", px, py, g, g >= 0.0 ? 1 : -1);
            out << buf;
        }
    }
    if (!out) throw data_error("write failed for '" + path.string() + "'");
}

/// Accuracy cell in the benchmark-table style: "97.43+-0.81".
inline std::string format_accuracy(double mean, double std_dev) {
    return detail::format_double("%.2f", mean) + "+-" + detail::format_double("%.2f", std_dev);
}

/// Result table as CSV. Wall-clock columns are opt-in: timing varies between
/// runs and would break byte-level comparison of otherwise identical results.
inline void write_table_csv(const std::filesystem::path& path, const std::vector<result_row>& rows,
                            bool include_timing = false) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << "setting,family,params,train_mean,train_std,test_mean,test_std,repetitions";
    if (include_timing) out << ",wall_seconds";
    out << ",status\n";
    for (const auto& row : rows) {
        out << row.setting << ',' << (row.failed ? "-" : to_string(row.spec.family)) << ','
            << (row.failed ? "-" : param_string(row.spec)) << ',';
        if (row.failed)
            out << "--,--,--,--," << row.repetitions;
        else
            out << detail::format_double("%.2f", row.train_mean) << ',' << detail::format_double("%.2f", row.train_std)
                << ',' << detail::format_double("%.2f", row.test_mean) << ','
                << detail::format_double("%.2f", row.test_std) << ',' << row.repetitions;
        if (include_timing) out << ',' << detail::format_double("%.3f", row.wall_seconds);
        out << ',' << (row.failed ? "failed: " + row.note : "ok") << '\n';
    }
    if (!out) throw data_error("write failed for '" + path.string() + "'");
}

/// Plain-text table with aligned columns for terminal output.
inline std::string format_table_text(const std::vector<result_row>& rows) {
    const std::vector<std::string> header = {"setting", "family", "params", "train", "test", "reps"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    for (const auto& row : rows) {
        if (row.failed) {
            cells.push_back({row.setting, "-", row.note.empty() ? "--" : row.note, "--", "--",
                             std::to_string(row.repetitions)});
        } else {
            cells.push_back({row.setting, to_string(row.spec.family), param_string(row.spec),
                             format_accuracy(row.train_mean, row.train_std),
                             format_accuracy(row.test_mean, row.test_std), std::to_string(row.repetitions)});
        }
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    std::string out;
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out += line[c];
            if (c + 1 < line.size()) out += std::string(width[c] - line[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

}  // namespace gmm
