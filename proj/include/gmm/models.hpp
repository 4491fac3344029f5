#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gmm/dataset.hpp"
#include "gmm/error.hpp"
#include "gmm/influence.hpp"
#include "gmm/kernel.hpp"
#include "gmm/qp.hpp"

namespace gmm {

enum class model_family { svm, svm_m, hgmm, sgmm };

inline std::string to_string(model_family f) {
    switch (f) {
        case model_family::svm: return "svm";
        case model_family::svm_m: return "svmm";
        case model_family::hgmm: return "hgmm";
        case model_family::sgmm: return "sgmm";
    }
    throw domain_error("unknown model family");
}

inline model_family model_family_from_string(const std::string& s) {
    if (s == "svm") return model_family::svm;
    if (s == "svmm" || s == "svm_m") return model_family::svm_m;
    if (s == "hgmm") return model_family::hgmm;
    if (s == "sgmm") return model_family::sgmm;
    throw domain_error("unknown model family: " + s);
}

inline bool uses_memory(model_family f) { return f == model_family::hgmm || f == model_family::sgmm; }

/// What to train. Per-family requirements:
///   svm    kernel + finite C
///   svmm   kernel + memory_kernel + tau + finite C  (second kernel carries the memorization term)
///   hgmm   kernel + influence + lambda, C unbounded (the hard program has no box)
///   sgmm   kernel + influence + lambda + finite C
struct model_spec {
    model_family family = model_family::svm;
    kernel_spec kernel;
    std::optional<influence_spec> influence;
    std::optional<kernel_spec> memory_kernel;
    double C = unbounded;
    double lambda = 1.0;
    double tau = 1.0;

    void validate() const {
        kernel.validate();
        const bool bounded = std::isfinite(C);
        if (!(C > 0.0)) throw spec_error("C must be positive, got " + std::to_string(C));
        switch (family) {
            case model_family::svm:
                if (!bounded) throw spec_error("svm requires a finite C");
                break;
            case model_family::svm_m:
                if (!bounded) throw spec_error("svmm requires a finite C");
                if (!memory_kernel) throw spec_error("svmm requires a memory kernel");
                memory_kernel->validate();
                if (!(tau > 0.0) || !std::isfinite(tau))
                    throw spec_error("svmm requires finite tau > 0, got " + std::to_string(tau));
                break;
            case model_family::hgmm:
                if (bounded) throw spec_error("hgmm solves the hard program and takes no C; use sgmm for a box bound");
                [[fallthrough]];
            case model_family::sgmm:
                if (family == model_family::sgmm && !bounded) throw spec_error("sgmm requires a finite C");
                if (!influence) throw spec_error(to_string(family) + " requires an influence spec");
                influence->validate();
                if (!(lambda > 0.0) || !std::isfinite(lambda))
                    throw spec_error(to_string(family) + " requires finite lambda > 0, got " + std::to_string(lambda));
                break;
        }
    }
};

struct train_diagnostics {
    double objective = 0.0;
    double kkt_violation = 0.0;
    std::size_t iterations = 0;
    solve_status status = solve_status::converged;
    bool single_class = false;
    bool degenerate_bias = false;
};

/// A trained classifier. All training rows are retained: with a memory term
/// every c_i can be nonzero regardless of alpha_i, so no row is prunable.
/// The primal normal vector is never formed; the kernel part of the decision
/// stays in its expansion form.
struct trained_model {
    model_spec spec;
    Eigen::MatrixXd X;       // training rows (after scaling, when a scaler is present)
    Eigen::VectorXd y;       // +1/-1
    Eigen::VectorXd alpha;
    Eigen::VectorXd c;       // memory costs; empty for svm/svmm and single-class models
    double b = 0.0;
    std::optional<influence_model> influence;
    std::optional<minmax_scaler> scaler;
    train_diagnostics diagnostics;
};

struct train_options {
    double tol = 1e-3;
    std::size_t max_passes = 1'000'000;
    bool scale = false;  // fit a min-max scaler on the training rows and record it
    solver_log log;
};

/// Dual matrix Q(i,j) = y_i y_j M(i,j) with the family's effective augmented
/// kernel M: svm K; svmm K + tau*K2; hgmm/sgmm K + (1/lambda) Delta Delta'.
inline Eigen::MatrixXd assemble_q(model_family family, const Eigen::Ref<const Eigen::MatrixXd>& K,
                                  const Eigen::MatrixXd* Delta, const Eigen::MatrixXd* K2, double lambda,
                                  double tau, const Eigen::Ref<const Eigen::VectorXd>& y) {
    const Eigen::Index m = K.rows();
    if (K.cols() != m || y.size() != m) throw domain_error("gram/label shapes disagree");

    Eigen::MatrixXd M;
    switch (family) {
        case model_family::svm: M = K; break;
        case model_family::svm_m:
            if (!K2) throw spec_error("svmm dual needs the memory-kernel gram");
            if (K2->rows() != m || K2->cols() != m) throw domain_error("memory-kernel gram shape disagrees");
            M = K + tau * (*K2);
            break;
        case model_family::hgmm:
        case model_family::sgmm:
            if (!Delta) throw spec_error(to_string(family) + " dual needs the influence matrix");
            if (Delta->rows() != m) throw domain_error("influence matrix row count disagrees");
            if (!(lambda > 0.0)) throw domain_error("lambda must be positive, got " + std::to_string(lambda));
            M = K + (1.0 / lambda) * ((*Delta) * Delta->transpose());
            break;
    }
    return y.asDiagonal() * M * y.asDiagonal();
}

/// c = (1/lambda) Y Delta' Y alpha: the per-sample price of memorization,
/// recoverable from alpha alone.
inline Eigen::VectorXd recover_memory_costs(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                            const Eigen::Ref<const Eigen::MatrixXd>& Delta,
                                            const Eigen::Ref<const Eigen::VectorXd>& y, double lambda) {
    if (!(lambda > 0.0)) throw domain_error("lambda must be positive, got " + std::to_string(lambda));
    if (alpha.size() != Delta.rows() || y.size() != alpha.size())
        throw domain_error("alpha/influence/label shapes disagree");
    return (1.0 / lambda) * y.cwiseProduct(Delta.transpose() * y.cwiseProduct(alpha));
}

struct bias_result {
    double b = 0.0;
    bool degenerate = false;
};

/// Offset from the KKT conditions, given the pre-bias decision g0 at the
/// training points. Averages y_k - g0_k over every index whose multiplier is
/// strictly inside the box (all such k agree at exact optimality; averaging
/// absorbs solver tolerance). With no interior multiplier the KKT inequalities
/// still bracket b: bound-side residuals give a feasible interval and b is its
/// midpoint; an empty interval on both sides degenerates to b = 0.
inline bias_result compute_bias(const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                const Eigen::Ref<const Eigen::VectorXd>& g0, double upper) {
    const Eigen::Index m = y.size();
    if (alpha.size() != m || g0.size() != m) throw domain_error("bias inputs disagree in length");
    const bool bounded = std::isfinite(upper);
    const double tol_sv = 1e-8 * (bounded ? std::max(1.0, upper) : 1.0);

    double sum = 0.0;
    Eigen::Index eligible = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
        const bool interior = bounded ? (alpha(k) > tol_sv && alpha(k) < upper - tol_sv) : alpha(k) > tol_sv;
        if (interior) {
            sum += y(k) - g0(k);
            ++eligible;
        }
    }
    if (eligible > 0) return {sum / static_cast<double>(eligible), false};

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < m; ++k) {
        const double r = y(k) - g0(k);
        const bool at_zero = alpha(k) <= tol_sv;
        const bool at_upper = bounded && alpha(k) >= upper - tol_sv;
        // margin >= 1 at alpha = 0, margin <= 1 at alpha = C; each residual
        // bounds b from one side depending on the label sign
        if ((at_zero && y(k) > 0.0) || (at_upper && y(k) < 0.0)) lo = std::max(lo, r);
        if ((at_zero && y(k) < 0.0) || (at_upper && y(k) > 0.0)) hi = std::min(hi, r);
    }
    if (std::isfinite(lo) && std::isfinite(hi)) return {0.5 * (lo + hi), false};
    if (std::isfinite(lo)) return {lo, false};
    if (std::isfinite(hi)) return {hi, false};
    return {0.0, true};
}

namespace detail {

/// Pre-bias decision values at the training points.
inline Eigen::VectorXd prebias_train_decisions(model_family family, const Eigen::MatrixXd& K,
                                               const Eigen::MatrixXd* Delta, const Eigen::MatrixXd* K2,
                                               double tau, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                                               const Eigen::VectorXd& c) {
    Eigen::VectorXd g0 = K * y.cwiseProduct(alpha);
    if (family == model_family::svm_m) g0 += tau * ((*K2) * y.cwiseProduct(alpha));
    if (uses_memory(family)) g0 += (*Delta) * y.cwiseProduct(c);
    return g0;
}

}  // namespace detail

inline trained_model train(const model_spec& spec, const dataset& ds, const train_options& options = {}) {
    spec.validate();
    ds.validate();
    if (!(options.tol > 0.0)) throw domain_error("solver tolerance must be positive");
    if (options.max_passes == 0) throw domain_error("max_passes must be positive");

    trained_model model;
    model.spec = spec;
    if (options.scale) {
        model.scaler = minmax_scaler::fit(ds.X);
        model.X = model.scaler->apply(ds.X);
    } else {
        model.X = ds.X;
    }
    model.y = ds.y_real();
    const Eigen::Index m = model.X.rows();

    const bool has_pos = (model.y.array() > 0).any();
    const bool has_neg = (model.y.array() < 0).any();
    if (!has_pos || !has_neg) {
        // one-class input: the equality constraint pins alpha at zero, so the
        // model degenerates to a constant vote for the present class
        model.alpha = Eigen::VectorXd::Zero(m);
        model.b = has_pos ? 1.0 : -1.0;
        model.diagnostics.single_class = true;
        return model;
    }

    const Eigen::MatrixXd K = gram(spec.kernel, model.X);
    Eigen::MatrixXd Delta, K2;
    const Eigen::MatrixXd* delta_ptr = nullptr;
    const Eigen::MatrixXd* k2_ptr = nullptr;
    if (uses_memory(spec.family)) {
        model.influence = fit_influence(*spec.influence, model.X);
        Delta = influence_matrix(*model.influence, model.X);
        delta_ptr = &Delta;
    } else if (spec.family == model_family::svm_m) {
        K2 = gram(*spec.memory_kernel, model.X);
        k2_ptr = &K2;
    }

    dual_problem problem;
    problem.Q = q_provider(assemble_q(spec.family, K, delta_ptr, k2_ptr, spec.lambda, spec.tau, model.y));
    problem.y = model.y;
    problem.upper = spec.family == model_family::hgmm ? unbounded : spec.C;
    problem.tol = options.tol;
    problem.max_passes = options.max_passes;
    problem.log = options.log;

    const dual_solution sol = solve_dual(problem);
    if (sol.status == solve_status::infeasible)
        throw infeasible_error(
            "the hard generalization-memorization program is infeasible for this data and influence: "
            "no decision function can memorize every training label (the dual is unbounded below); "
            "train sgmm instead or widen the influence");

    model.alpha = sol.alpha;
    model.diagnostics.objective = sol.objective;
    model.diagnostics.kkt_violation = sol.kkt_violation;
    model.diagnostics.iterations = sol.iterations;
    model.diagnostics.status = sol.status;

    if (uses_memory(spec.family)) model.c = recover_memory_costs(model.alpha, Delta, model.y, spec.lambda);

    const Eigen::VectorXd g0 = detail::prebias_train_decisions(spec.family, K, delta_ptr, k2_ptr, spec.tau,
                                                               model.y, model.alpha, model.c);
    const bias_result bias = compute_bias(model.y, model.alpha, g0, problem.upper);
    model.b = bias.b;
    model.diagnostics.degenerate_bias = bias.degenerate;
    return model;
}

namespace detail {

/// Expansion evaluation on rows already in the model's (scaled) coordinates.
inline Eigen::VectorXd decision_values_scaled(const trained_model& model,
                                              const Eigen::Ref<const Eigen::MatrixXd>& Xs) {
    const Eigen::VectorXd weights = model.y.cwiseProduct(model.alpha);
    Eigen::VectorXd g = cross_gram(model.spec.kernel, Xs, model.X) * weights;
    if (model.spec.family == model_family::svm_m)
        g += model.spec.tau * (cross_gram(*model.spec.memory_kernel, Xs, model.X) * weights);
    if (model.c.size() > 0 && model.influence)
        g += influence_matrix(*model.influence, Xs) * model.y.cwiseProduct(model.c);
    g.array() += model.b;
    return g;
}

}  // namespace detail

/// g(x) for each row of Xq: kernel expansion + b, plus the influence-weighted
/// memory term for families that carry one.
inline Eigen::VectorXd decision_values(const trained_model& model, const Eigen::Ref<const Eigen::MatrixXd>& Xq) {
    if (Xq.cols() != model.X.cols())
        throw domain_error("query has " + std::to_string(Xq.cols()) + " features, model expects " +
                           std::to_string(model.X.cols()));
    if (model.scaler) return detail::decision_values_scaled(model, model.scaler->apply(Xq));
    return detail::decision_values_scaled(model, Xq);
}

inline double decision(const trained_model& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return decision_values(model, x.transpose())(0);
}

/// Labels from decision values; g = 0 votes +1 so accuracy counts reproduce
/// exactly across platforms.
inline Eigen::VectorXi predict(const trained_model& model, const Eigen::Ref<const Eigen::MatrixXd>& Xq) {
    const Eigen::VectorXd g = decision_values(model, Xq);
    Eigen::VectorXi labels(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) labels(i) = g(i) >= 0.0 ? 1 : -1;
    return labels;
}

inline double empirical_risk(const trained_model& model, const dataset& ds) {
    ds.validate();
    const Eigen::VectorXi labels = predict(model, ds.X);
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        if (labels(i) != ds.y(i)) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

/// Hinge slacks max(0, 1 - y_i g(x_i)) at the training points; zero everywhere
/// for a converged hard model. The stored rows are already scaled, so the
/// expansion is evaluated on them directly.
inline Eigen::VectorXd training_slacks(const trained_model& model) {
    const Eigen::VectorXd g = detail::decision_values_scaled(model, model.X);
    return (1.0 - model.y.array() * g.array()).cwiseMax(0.0);
}

enum class risk_regime { large_emp, small_emp };

inline std::string to_string(risk_regime r) {
    return r == risk_regime::large_emp ? "large_emp" : "small_emp";
}

/// Confidence-gap term and the resulting risk bound, in the standard
/// capacity-based form: gap = (ln(2m/h + 1) - ln(eta/4)) / (m/h). The "eta/4"
/// grouping is deliberate: it keeps the gap positive for every eta < 1.
struct risk_bound_info {
    std::size_t m = 0;
    double h = 0.0;
    double eta = 0.0;
    double g_gap = 0.0;
    risk_regime regime = risk_regime::small_emp;
    double bound = std::numeric_limits<double>::quiet_NaN();
};

inline risk_bound_info generalization_gap(std::size_t m, double h, double eta) {
    if (m < 1) throw domain_error("sample count must be at least 1");
    if (!(h > 0.0) || !std::isfinite(h)) throw domain_error("capacity h must be finite and positive");
    if (!(eta > 0.0 && eta < 1.0)) throw domain_error("confidence level eta must lie in (0, 1)");
    risk_bound_info info;
    info.m = m;
    info.h = h;
    info.eta = eta;
    const double ratio = static_cast<double>(m) / h;
    info.g_gap = (std::log(2.0 * ratio + 1.0) - std::log(eta / 4.0)) / ratio;
    return info;
}

/// Bound on expected risk: empirical risk plus sqrt(2*gap) when the empirical
/// risk dominates the gap, or sqrt(2)*gap when the gap dominates. The caller
/// picks the regime; there is no principled automatic threshold.
inline double risk_bound(double r_emp, risk_bound_info& info, risk_regime regime) {
    if (!(r_emp >= 0.0 && r_emp <= 1.0)) throw domain_error("empirical risk must lie in [0, 1]");
    info.regime = regime;
    info.bound = regime == risk_regime::large_emp ? r_emp + std::sqrt(2.0 * info.g_gap)
                                                  : r_emp + std::sqrt(2.0) * info.g_gap;
    return info.bound;
}

}  // namespace gmm
