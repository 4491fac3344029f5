// Acceptance gate: one pass/fail line per criterion, checked against pinned
// tolerances. Every criterion writes its numeric evidence into an artifact
// directory; the whole battery runs twice and the final criterion compares
// the two directories byte for byte.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmm/gmm.hpp"

namespace fs = std::filesystem;
using namespace gmm;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path.string() + "'");
    out << text;
}

struct outcome {
    int id = 0;
    std::string verdict = "PASS";  // PASS | FAIL | SKIP
    std::string detail;
};

// ------------------------------------------------------------ generators

dataset random_dataset(std::uint64_t seed, Eigen::Index m, Eigen::Index n) {
    rng_engine rng = make_rng(seed);
    dataset ds;
    ds.X.resize(m, n);
    ds.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) ds.X(i, j) = gaussian(rng);
        ds.y(i) = uniform_below(rng, 2) == 0 ? -1 : 1;
    }
    if (m >= 2) {  // keep both classes present
        ds.y(0) = 1;
        ds.y(1) = -1;
    }
    ds.name = "random";
    return ds;
}

/// Random labels over points with pairwise distance >= 0.4 (first coordinate
/// on a jittered unit lattice, remaining coordinates free). Memory-influence
/// criteria need this floor: once two points are much closer than the
/// influence scale, the influence matrix is singular at double precision and
/// the memorizing multipliers stop being representable, so the exact-recovery
/// claims hold only with the influence sharpness matched to the separation.
dataset separated_dataset(std::uint64_t seed, Eigen::Index m, Eigen::Index n) {
    rng_engine rng = make_rng(seed);
    dataset ds;
    ds.X.resize(m, n);
    ds.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        ds.X(i, 0) = static_cast<double>(i) + 0.3 * (2.0 * uniform_real(rng) - 1.0);
        for (Eigen::Index j = 1; j < n; ++j) ds.X(i, j) = gaussian(rng);
        ds.y(i) = uniform_below(rng, 2) == 0 ? -1 : 1;
    }
    if (m >= 2) {
        ds.y(0) = 1;
        ds.y(1) = -1;
    }
    ds.name = "separated";
    return ds;
}

/// Influence sharpness paired with separated_dataset / synthetic_clusters:
/// exp(-sigma d^2) <= e^-2 at the closest admissible pair keeps the influence
/// matrix diagonally dominant.
double matched_influence_sigma(int i) { return std::ldexp(1.0, i % 3 + 4); }

/// Two overlapping Gaussian clusters with every pairwise distance >= 0.05
/// (resampled on collision) so memorizing machines stay well conditioned.
dataset synthetic_clusters(std::uint64_t seed, Eigen::Index per_class) {
    rng_engine rng = make_rng(seed);
    dataset ds;
    const Eigen::Index m = 2 * per_class;
    ds.X.resize(m, 2);
    ds.y.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int cls = i < per_class ? 1 : -1;
        for (;;) {
            ds.X(i, 0) = 2.0 * cls + gaussian(rng);
            ds.X(i, 1) = gaussian(rng);
            bool clear = true;
            for (Eigen::Index k = 0; k < i && clear; ++k)
                clear = (ds.X.row(i) - ds.X.row(k)).squaredNorm() >= 0.05 * 0.05;
            if (clear) break;
        }
        ds.y(i) = cls;
    }
    ds.name = "synthetic";
    return ds;
}

Eigen::VectorXd labels(const dataset& ds) { return ds.y.cast<double>(); }

double pow2(int e) { return std::ldexp(1.0, e); }

// ------------------------------------------------------------ criteria

/// Random memory-augmented duals: the production solver must match the
/// projected-gradient oracle on objective and multipliers.
outcome solver_oracle_equivalence(const fs::path& dir) {
    const auto start = clock_type::now();
    std::string csv = "i,m,C,obj_diff,alpha_diff\n";
    double worst_obj = 0.0, worst_alpha = 0.0;

    for (int i = 0; i < 200; ++i) {
        const Eigen::Index m = 2 + i % 11;
        const Eigen::Index n = 1 + i % 3;
        const dataset ds = separated_dataset(1000 + i, m, n);
        const kernel_spec kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(pow2(i % 5 - 2));
        const influence_spec infl =
            i % 3 == 0 ? influence_spec::identity() : influence_spec::rbf(matched_influence_sigma(i));
        const double lambda = pow2(i % 5 - 2);
        const double C = std::array<double, 3>{1.0, 10.0, 1e8}[i % 3];

        const Eigen::VectorXd y = labels(ds);
        const Eigen::MatrixXd K = gram(kernel, ds.X);
        const influence_model fitted = fit_influence(infl, ds.X);
        const Eigen::MatrixXd Delta = influence_matrix(fitted, ds.X);

        dual_problem p;
        p.Q = q_provider(assemble_q(model_family::sgmm, K, &Delta, nullptr, lambda, 0.0, y));
        p.y = y;
        p.upper = C;
        p.tol = 1e-10;

        const dual_solution got = solve_dual(p);
        const dual_solution oracle = oracle_solve(p);
        const double obj_diff = std::abs(got.objective - oracle.objective);
        const double alpha_diff = (got.alpha - oracle.alpha).cwiseAbs().maxCoeff();
        worst_obj = std::max(worst_obj, obj_diff);
        worst_alpha = std::max(worst_alpha, alpha_diff);
        csv += fmt("%d,%lld,%.17g,%.17g,%.17g\n", i, static_cast<long long>(m), C, obj_diff, alpha_diff);
    }
    write_text(dir / "c01_solver_oracle.csv", csv);

    const double elapsed = seconds_since(start);
    outcome out{1};
    out.detail = fmt("200 duals, max objective diff %.3g (<=1e-6), max alpha diff %.3g (<=1e-4), %.1fs (<=30s)",
                     worst_obj, worst_alpha, elapsed);
    if (worst_obj > 1e-6 || worst_alpha > 1e-4 || elapsed > 30.0) out.verdict = "FAIL";
    return out;
}

/// Two-point problems whose KKT systems were solved by hand.
outcome hand_kkt_fixtures(const fs::path& dir) {
    dataset ds;
    ds.X.resize(2, 1);
    ds.X << 1.0, -1.0;
    ds.y.resize(2);
    ds.y << 1.0, -1.0;
    ds.name = "two-point";

    train_options tight;
    tight.tol = 1e-10;

    model_spec svm;
    svm.family = model_family::svm;
    svm.kernel = kernel_spec::linear();
    svm.C = 10.0;
    const trained_model svm_model = train(svm, ds, tight);

    model_spec hard;
    hard.family = model_family::hgmm;
    hard.kernel = kernel_spec::linear();
    hard.influence = influence_spec::identity();
    hard.lambda = 1.0;
    const trained_model hard_model = train(hard, ds, tight);

    const double svm_alpha_err = (svm_model.alpha.array() - 0.5).abs().maxCoeff();
    const double hard_alpha_err = (hard_model.alpha.array() - 1.0 / 3.0).abs().maxCoeff();
    const double hard_c_err = (hard_model.c.array() - 1.0 / 3.0).abs().maxCoeff();
    const double b_err = std::max(std::abs(svm_model.b), std::abs(hard_model.b));

    write_text(dir / "c02_fixtures.txt",
               fmt("svm alpha err %.17g\nhard alpha err %.17g\nhard c err %.17g\nbias err %.17g\n",
                   svm_alpha_err, hard_alpha_err, hard_c_err, b_err));

    outcome out{2};
    const double worst = std::max({svm_alpha_err, hard_alpha_err, hard_c_err, b_err});
    out.detail = fmt("max deviation from hand solution %.3g (<=1e-8)", worst);
    if (worst > 1e-8) out.verdict = "FAIL";
    return out;
}

/// A nonsingular influence matrix makes the hard program feasible, so training
/// accuracy must be exactly 100%% on every random instance.
outcome memorization_guarantee(const fs::path& dir) {
    const auto start = clock_type::now();
    std::string csv = "i,m,accuracy\n";
    int perfect = 0;

    for (int i = 0; i < 500; ++i) {
        const Eigen::Index m = 2 + i % 59;
        const Eigen::Index n = 1 + i % 4;
        const dataset ds = separated_dataset(3000 + i, m, n);

        model_spec spec;
        spec.family = model_family::hgmm;
        spec.kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(pow2(i % 4 - 2));
        spec.influence = influence_spec::rbf(matched_influence_sigma(i));
        spec.lambda = pow2(i % 5 - 2);

        train_options opt;
        opt.tol = 1e-6;
        const trained_model model = train(spec, ds, opt);
        const double acc = accuracy_percent(model, ds);
        if (acc == 100.0) ++perfect;
        csv += fmt("%d,%lld,%.17g\n", i, static_cast<long long>(m), acc);
    }
    write_text(dir / "c03_memorization.csv", csv);

    const double elapsed = seconds_since(start);
    outcome out{3};
    out.detail = fmt("%d/500 datasets memorized exactly, %.1fs (<=120s)", perfect, elapsed);
    if (perfect != 500 || elapsed > 120.0) out.verdict = "FAIL";
    return out;
}

/// Degenerate-influence equivalences: zero influence reproduces the plain
/// SVM decision; identity influence matches an independently solved
/// L2-slack-style dual (box 1e8 standing in for an unbounded multiplier).
outcome degenerate_influence_equivalences(const fs::path& dir) {
    std::string csv = "case,i,diff\n";
    double worst_zero = 0.0, worst_identity = 0.0;

    for (int i = 0; i < 50; ++i) {
        const Eigen::Index m = 3 + i % 18;
        const Eigen::Index n = 1 + i % 3;
        const dataset ds = random_dataset(4000 + i, m, n);
        const kernel_spec kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(pow2(i % 4 - 1));
        const double C = i % 2 == 0 ? 1.0 : 10.0;

        model_spec svm;
        svm.family = model_family::svm;
        svm.kernel = kernel;
        svm.C = C;
        train_options tight;
        tight.tol = 1e-10;
        const trained_model svm_model = train(svm, ds, tight);

        const Eigen::VectorXd y = labels(ds);
        const Eigen::MatrixXd K = gram(kernel, ds.X);
        const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m, m);
        dual_problem p;
        p.Q = q_provider(assemble_q(model_family::sgmm, K, &zero, nullptr, 1.0, 0.0, y));
        p.y = y;
        p.upper = C;
        p.tol = 1e-10;
        const dual_solution sol = solve_dual(p);
        const Eigen::VectorXd w = y.cwiseProduct(sol.alpha);
        const double b = compute_bias(y, sol.alpha, K * w, C).b;

        rng_engine rng = make_rng(4500 + i);
        Eigen::MatrixXd probes(5, n);
        for (Eigen::Index r = 0; r < probes.rows(); ++r)
            for (Eigen::Index c = 0; c < n; ++c) probes(r, c) = gaussian(rng);

        const Eigen::VectorXd g_svm = decision_values(svm_model, probes);
        const Eigen::VectorXd g_zero = (cross_gram(kernel, probes, ds.X) * w).array() + b;
        const double diff = (g_svm - g_zero).cwiseAbs().maxCoeff();
        worst_zero = std::max(worst_zero, diff);
        csv += fmt("zero,%d,%.17g\n", i, diff);
    }

    for (int i = 0; i < 50; ++i) {
        const Eigen::Index m = 2 + i % 11;
        const Eigen::Index n = 1 + i % 3;
        const dataset ds = random_dataset(4700 + i, m, n);
        const kernel_spec kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(pow2(i % 4 - 1));
        const double lambda = pow2(i % 5 - 2);

        model_spec hard;
        hard.family = model_family::hgmm;
        hard.kernel = kernel;
        hard.influence = influence_spec::identity();
        hard.lambda = lambda;
        train_options tight;
        tight.tol = 1e-10;
        const trained_model hard_model = train(hard, ds, tight);

        const Eigen::VectorXd y = labels(ds);
        const Eigen::MatrixXd K = gram(kernel, ds.X);
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
        dual_problem p;
        p.Q = q_provider(assemble_q(model_family::hgmm, K, &eye, nullptr, lambda, 0.0, y));
        p.y = y;
        p.upper = 1e8;  // finite stand-in for the unbounded hard dual
        p.tol = 1e-10;
        const dual_solution oracle = oracle_solve(p);

        const double diff = (hard_model.alpha - oracle.alpha).cwiseAbs().maxCoeff();
        worst_identity = std::max(worst_identity, diff);
        csv += fmt("identity,%d,%.17g\n", i, diff);
    }
    write_text(dir / "c04_equivalences.csv", csv);

    outcome out{4};
    out.detail = fmt("zero-influence decision diff %.3g (<=1e-8), identity-influence alpha diff %.3g (<=1e-6)",
                     worst_zero, worst_identity);
    if (worst_zero > 1e-8 || worst_identity > 1e-6) out.verdict = "FAIL";
    return out;
}

/// Two-kernel models equal memory models whose influence matrix is the
/// Cholesky factor of the second Gram: duals, multipliers, and held-out
/// decisions must coincide.
outcome two_kernel_equivalence(const fs::path& dir) {
    std::string csv = "i,q_diff,alpha_diff,decision_diff\n";
    double worst_q = 0.0, worst_alpha = 0.0, worst_g = 0.0;
    const kernel_spec memory_kernel = kernel_spec::rbf(32.0);

    for (int i = 0; i < 50; ++i) {
        const Eigen::Index m = 4 + i % 21;
        const Eigen::Index n = 1 + i % 3;
        const dataset ds = random_dataset(5000 + i, m, n);
        const kernel_spec kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(1.0);
        const double tau = std::array<double, 3>{0.25, 1.0, 4.0}[i % 3];
        const double C = i % 2 == 0 ? 1.0 : 10.0;

        model_spec two_kernel;
        two_kernel.family = model_family::svm_m;
        two_kernel.kernel = kernel;
        two_kernel.memory_kernel = memory_kernel;
        two_kernel.tau = tau;
        two_kernel.C = C;
        train_options tight;
        tight.tol = 1e-10;
        const trained_model tk = train(two_kernel, ds, tight);

        const Eigen::VectorXd y = labels(ds);
        const Eigen::MatrixXd K = gram(kernel, ds.X);
        const Eigen::MatrixXd K2 = gram(memory_kernel, ds.X);
        const Eigen::MatrixXd jittered = K2 + 1e-10 * Eigen::MatrixXd::Identity(m, m);
        const Eigen::MatrixXd Delta = Eigen::LLT<Eigen::MatrixXd>(jittered).matrixL();

        const Eigen::MatrixXd Q_tk = assemble_q(model_family::svm_m, K, nullptr, &K2, 0.0, tau, y);
        const Eigen::MatrixXd Q_mem =
            assemble_q(model_family::sgmm, K, &Delta, nullptr, 1.0 / tau, 0.0, y);
        const double q_diff = (Q_tk - Q_mem).cwiseAbs().maxCoeff();

        dual_problem p;
        p.Q = q_provider(Q_mem);
        p.y = y;
        p.upper = C;
        p.tol = 1e-10;
        const dual_solution sol = solve_dual(p);
        const double alpha_diff = (tk.alpha - sol.alpha).cwiseAbs().maxCoeff();

        const Eigen::VectorXd w = y.cwiseProduct(sol.alpha);
        const Eigen::MatrixXd M_mem = K + tau * (Delta * Delta.transpose());
        const double b = compute_bias(y, sol.alpha, M_mem * w, C).b;
        const Eigen::VectorXd c = recover_memory_costs(sol.alpha, Delta, y, 1.0 / tau);

        rng_engine rng = make_rng(5500 + i);
        Eigen::MatrixXd probes(5, n);
        for (Eigen::Index r = 0; r < probes.rows(); ++r)
            for (Eigen::Index cc = 0; cc < n; ++cc) probes(r, cc) = gaussian(rng);

        // held-out influence values solve Delta d = k2(x), the unique
        // extension consistent with Delta Delta' = K2 on the sample
        const Eigen::MatrixXd k2_cross = cross_gram(memory_kernel, ds.X, probes);  // m x probes
        const Eigen::MatrixXd d = Delta.triangularView<Eigen::Lower>().solve(k2_cross);
        const Eigen::VectorXd g_mem =
            (cross_gram(kernel, probes, ds.X) * w + d.transpose() * y.cwiseProduct(c)).array() + b;
        const Eigen::VectorXd g_tk = decision_values(tk, probes);
        const double g_diff = (g_tk - g_mem).cwiseAbs().maxCoeff();

        worst_q = std::max(worst_q, q_diff);
        worst_alpha = std::max(worst_alpha, alpha_diff);
        worst_g = std::max(worst_g, g_diff);
        csv += fmt("%d,%.17g,%.17g,%.17g\n", i, q_diff, alpha_diff, g_diff);
    }
    write_text(dir / "c05_two_kernel.csv", csv);

    outcome out{5};
    out.detail = fmt("Q diff %.3g (<=1e-8), alpha diff %.3g (<=1e-6), held-out decision diff %.3g (<=1e-6)",
                     worst_q, worst_alpha, worst_g);
    if (worst_q > 1e-8 || worst_alpha > 1e-6 || worst_g > 1e-6) out.verdict = "FAIL";
    return out;
}

/// With a huge box the soft machine converges to the hard one.
outcome soft_to_hard_limit(const fs::path& dir) {
    std::string csv = "i,alpha_diff\n";
    double worst = 0.0;

    for (int i = 0; i < 20; ++i) {
        const Eigen::Index m = 4 + i % 27;
        const Eigen::Index n = 1 + i % 3;
        const dataset ds = separated_dataset(6000 + i, m, n);

        model_spec hard;
        hard.family = model_family::hgmm;
        hard.kernel = i % 2 == 0 ? kernel_spec::linear() : kernel_spec::rbf(pow2(i % 4 - 1));
        hard.influence = influence_spec::rbf(matched_influence_sigma(i));
        hard.lambda = pow2(i % 5 - 2);

        model_spec soft = hard;
        soft.family = model_family::sgmm;
        soft.C = 1e6;

        train_options tight;
        tight.tol = 1e-8;
        const trained_model hm = train(hard, ds, tight);
        const trained_model sm = train(soft, ds, tight);
        const double diff = (hm.alpha - sm.alpha).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
        csv += fmt("%d,%.17g\n", i, diff);
    }
    write_text(dir / "c06_limit.csv", csv);

    outcome out{6};
    out.detail = fmt("20 instances, max alpha diff %.3g (<=1e-4)", worst);
    if (worst > 1e-4) out.verdict = "FAIL";
    return out;
}

/// Embedded-point toy: the hard machine memorizes the surrounded positive,
/// the small-box soft machine gives it up.
outcome embedded_point_toy(const fs::path& dir) {
    const auto start = clock_type::now();
    const dataset toy = make_toy_dataset(7, 30);
    const Eigen::Index embedded = toy_embedded_index(toy);

    model_spec hard;
    hard.family = model_family::hgmm;
    hard.kernel = kernel_spec::linear();
    hard.influence = influence_spec::rbf(1.0);
    hard.lambda = 1.0;

    model_spec soft;
    soft.family = model_family::sgmm;
    soft.kernel = kernel_spec::linear();
    soft.influence = influence_spec::rbf(1.0);
    soft.lambda = 4.0;
    soft.C = 0.5;

    train_options opt;
    opt.tol = 1e-6;
    const trained_model hm = train(hard, toy, opt);
    const trained_model sm = train(soft, toy, opt);

    const double acc_h = accuracy_percent(hm, toy);
    const double acc_s = accuracy_percent(sm, toy);
    const int pred_h = predict(hm, toy.X.row(embedded))(0);
    const int pred_s = predict(sm, toy.X.row(embedded))(0);

    write_decision_grid_csv(dir / "c07_toy_hgmm_grid.csv", hm, -4.0, 4.0, -3.0, 3.0, 41);
    write_decision_grid_csv(dir / "c07_toy_sgmm_grid.csv", sm, -4.0, 4.0, -3.0, 3.0, 41);
    write_text(dir / "c07_toy.txt", fmt("hgmm accuracy %.17g embedded %d\nsgmm accuracy %.17g embedded %d\n",
                                        acc_h, pred_h, acc_s, pred_s));

    const double elapsed = seconds_since(start);
    outcome out{7};
    out.detail = fmt("hgmm train %.2f%% (=100), sgmm train %.2f%% (<100), embedded predicted %+d by sgmm, %.1fs (<=10s)",
                     acc_h, acc_s, pred_s, elapsed);
    if (!(acc_h == 100.0 && acc_s < 100.0 && pred_s == -1 && elapsed <= 10.0)) out.verdict = "FAIL";
    return out;
}

/// Desk-scale leave-one-out reproduction on user-supplied UCI files. The
/// grids are coarsened (stride 2^5 over the published ranges) to fit a
/// workstation; the artifact records the grid actually used.
outcome uci_reproduction(const fs::path& dir) {
    outcome out{8};
    const char* env = std::getenv("GMM_UCI_DIR");
    if (!env || !*env) {
        write_text(dir / "c08_uci.txt", "skipped: GMM_UCI_DIR not set\n");
        out.verdict = "SKIP";
        out.detail = "set GMM_UCI_DIR to a directory holding heartc.csv and echocard.csv to enable";
        return out;
    }
    const fs::path heartc = fs::path(env) / "heartc.csv";
    const fs::path echocard = fs::path(env) / "echocard.csv";
    if (!fs::exists(heartc) || !fs::exists(echocard)) {
        write_text(dir / "c08_uci.txt", "skipped: dataset files missing\n");
        out.verdict = "SKIP";
        out.detail = "missing " + (fs::exists(heartc) ? echocard : heartc).string();
        return out;
    }

    grid_spec grid;
    grid.C = {pow2(-8), pow2(-3), pow2(2), pow2(7)};
    grid.lambda = grid.C;
    grid.tau = grid.C;
    grid.sigma = {pow2(-10), pow2(-5), 1.0, pow2(5)};

    eval_options opt;
    opt.scale = true;

    std::string report = "coarsened grids: C/lambda/tau {2^-8,2^-3,2^2,2^7}, sigma {2^-10,2^-5,1,2^5}\n";
    std::vector<result_row> rows;
    std::map<std::string, result_row> best;
    for (const fs::path& file : {heartc, echocard}) {
        const dataset ds = load_csv(file);
        for (const model_family family : {model_family::svm, model_family::svm_m, model_family::hgmm,
                                          model_family::sgmm}) {
            std::optional<influence_kind> infl;
            if (uses_memory(family)) infl = influence_kind::rbf;
            const auto candidates = enumerate_grid(family, kernel_kind::rbf, infl, grid);
            const grid_result res = grid_search(candidates, ds, grid_protocol::loo(), opt);
            rows.push_back(res.best_row);
            best[ds.name + "/" + to_string(family)] = res.best_row;
            report += fmt("%s %s: train %.2f test %.2f (%s)\n", ds.name.c_str(), to_string(family).c_str(),
                          res.best_row.train_mean, res.best_row.test_mean, param_string(res.best).c_str());
        }
    }
    write_table_csv(dir / "c08_uci_table.csv", rows);
    write_text(dir / "c08_uci.txt", report);

    bool ok = true;
    for (const model_family family : {model_family::svm, model_family::svm_m, model_family::hgmm,
                                      model_family::sgmm})
        ok = ok && best["heartc/" + to_string(family)].train_mean == 100.0;
    ok = ok && best["heartc/hgmm"].test_mean == 100.0;
    const double echo_test = best["echocard/hgmm"].test_mean;
    ok = ok && std::abs(echo_test - 90.08) <= 3.0;

    out.detail = fmt("heartc hgmm test %.2f (=100), echocard hgmm test %.2f (90.08+-3)",
                     best["heartc/hgmm"].test_mean, echo_test);
    if (!ok) out.verdict = "FAIL";
    return out;
}

/// Label-noise protocol: the hard machine's training accuracy stays pinned at
/// 100.00 +- 0.00 in every cell; the best-test soft machine stops memorizing
/// once labels are flipped.
outcome noise_protocol_invariant(const fs::path& dir) {
    const dataset ds = synthetic_clusters(42, 600);
    const std::vector<double> fractions{0.0, 0.05, 0.10, 0.15};
    const std::size_t reps = 5;
    const std::size_t train_size = 300;

    // Influence sharpness >= 1024 pairs with the 0.05 separation floor so the
    // hard machine can represent its memorizing multipliers in every cell; the
    // soft machine's box C <= 2 with lambda >= 1 caps each memory cost near 2,
    // too small to flip a label deep inside the opposite cluster.
    grid_spec hard_grid;
    hard_grid.lambda = {0.25, 1.0, 4.0};
    hard_grid.sigma = {1024.0, 2048.0};
    grid_spec soft_grid;
    soft_grid.C = {0.5, 2.0};
    soft_grid.lambda = {1.0, 4.0};
    soft_grid.sigma = {1024.0, 2048.0};

    eval_options opt;
    const auto hgmm_rows = noise_experiment(enumerate_grid(model_family::hgmm, kernel_kind::linear,
                                                           influence_kind::rbf, hard_grid),
                                            ds, fractions, train_size, reps, 42, opt);
    const auto sgmm_rows = noise_experiment(enumerate_grid(model_family::sgmm, kernel_kind::linear,
                                                           influence_kind::rbf, soft_grid),
                                            ds, fractions, train_size, reps, 42, opt);
    write_table_csv(dir / "c09_noise_hgmm.csv", hgmm_rows);
    write_table_csv(dir / "c09_noise_sgmm.csv", sgmm_rows);

    bool hard_pinned = true;
    for (const result_row& row : hgmm_rows)
        hard_pinned = hard_pinned && row.train_mean == 100.0 && row.train_std == 0.0;
    bool soft_lets_go = true;
    for (std::size_t i = 0; i < fractions.size(); ++i)
        if (fractions[i] > 0.0) soft_lets_go = soft_lets_go && sgmm_rows[i].train_mean < 100.0;

    outcome out{9};
    out.detail = fmt("hgmm train pinned at 100.00+-0.00 in %zu cells: %s; sgmm train <100 for f>0: %s",
                     hgmm_rows.size(), hard_pinned ? "yes" : "no", soft_lets_go ? "yes" : "no");
    if (!hard_pinned || !soft_lets_go) out.verdict = "FAIL";
    return out;
}

/// Hand-checked confidence-gap value and monotonicity of both bound regimes.
outcome risk_bound_calculator(const fs::path& dir) {
    risk_bound_info info = generalization_gap(1000, 100.0, 0.05);
    const double gap_err = std::abs(info.g_gap - 0.74266);

    bool monotone = true;
    double prev_large = -1.0, prev_small = -1.0;
    for (double r = 0.0; r <= 0.5001; r += 0.05) {
        risk_bound_info a = info;
        const double large = risk_bound(r, a, risk_regime::large_emp);
        const double small = risk_bound(r, a, risk_regime::small_emp);
        monotone = monotone && large > prev_large && small > prev_small;
        prev_large = large;
        prev_small = small;
    }
    double prev_gap_large = -1.0, prev_gap_small = -1.0;
    std::string sweep = "h,g_gap,bound_large,bound_small\n";
    for (double h = 20.0; h <= 400.0; h += 20.0) {
        risk_bound_info g = generalization_gap(1000, h, 0.05);
        const double large = risk_bound(0.1, g, risk_regime::large_emp);
        risk_bound_info g2 = generalization_gap(1000, h, 0.05);
        const double small = risk_bound(0.1, g2, risk_regime::small_emp);
        // g_gap grows with h, so both bounds must grow along the sweep
        monotone = monotone && large > prev_gap_large && small > prev_gap_small;
        prev_gap_large = large;
        prev_gap_small = small;
        sweep += fmt("%.17g,%.17g,%.17g,%.17g\n", h, g.g_gap, large, small);
    }
    write_text(dir / "c10_risk.txt", fmt("g_gap(1000,100,0.05) = %.17g\n", info.g_gap) + sweep);

    outcome out{10};
    out.detail = fmt("g_gap(1000,100,0.05) = %.6f (0.74266 +- 1e-4), bounds monotone: %s", info.g_gap,
                     monotone ? "yes" : "no");
    if (gap_err > 1e-4 || !monotone) out.verdict = "FAIL";
    return out;
}

std::vector<outcome> run_battery(const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<outcome> res;
    res.push_back(solver_oracle_equivalence(dir));
    res.push_back(hand_kkt_fixtures(dir));
    res.push_back(memorization_guarantee(dir));
    res.push_back(degenerate_influence_equivalences(dir));
    res.push_back(two_kernel_equivalence(dir));
    res.push_back(soft_to_hard_limit(dir));
    res.push_back(embedded_point_toy(dir));
    res.push_back(uci_reproduction(dir));
    res.push_back(noise_protocol_invariant(dir));
    res.push_back(risk_bound_calculator(dir));
    return res;
}

std::string slurp_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

outcome determinism(const fs::path& run1, const fs::path& run2) {
    const auto listing = [](const fs::path& root) {
        std::vector<fs::path> rel;
        for (const auto& entry : fs::recursive_directory_iterator(root))
            if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root));
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    const auto a = listing(run1);
    const auto b = listing(run2);

    outcome out{11};
    if (a != b) {
        out.verdict = "FAIL";
        out.detail = fmt("artifact listings differ (%zu vs %zu files)", a.size(), b.size());
        return out;
    }
    std::size_t mismatched = 0;
    std::string first_bad;
    for (const fs::path& rel : a)
        if (slurp_file(run1 / rel) != slurp_file(run2 / rel)) {
            ++mismatched;
            if (first_bad.empty()) first_bad = rel.string();
        }
    out.detail = fmt("%zu artifacts byte-identical across two runs", a.size());
    if (mismatched > 0) {
        out.verdict = "FAIL";
        out.detail = fmt("%zu/%zu artifacts differ between runs, first: %s", mismatched, a.size(),
                         first_bad.c_str());
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "gmm_acceptance";
    std::error_code ec;
    fs::remove_all(root, ec);
    fs::create_directories(root);

    std::vector<outcome> outcomes;
    try {
        outcomes = run_battery(root / "run1");
        run_battery(root / "run2");  // identical seeds; compared below
        outcomes.push_back(determinism(root / "run1", root / "run2"));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance battery aborted: %s\n", e.what());
        return 1;
    }

    static const char* names[] = {"solver-oracle equivalence",
                                  "hand-checked KKT fixtures",
                                  "memorization guarantee",
                                  "degenerate-influence equivalences",
                                  "two-kernel equivalence",
                                  "soft-to-hard limit",
                                  "embedded-point toy",
                                  "UCI leave-one-out reproduction",
                                  "label-noise protocol invariant",
                                  "risk-bound calculator",
                                  "determinism"};
    bool failed = false;
    for (const outcome& out : outcomes) {
        std::printf("%s criterion %d (%s): %s\n", out.verdict.c_str(), out.id, names[out.id - 1],
                    out.detail.c_str());
        failed = failed || out.verdict == "FAIL";
    }
    std::printf("artifacts under %s\n", root.string().c_str());
    return failed ? 1 : 0;
}
