#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gmm/error.hpp"

namespace gmm {

inline constexpr double unbounded = std::numeric_limits<double>::infinity();

/// Row/entry access to the symmetric dual matrix Q. Either wraps a
/// materialized matrix or computes rows on demand through a fill callback,
/// so callers can trade memory for recomputation.
class q_provider {
  public:
    using fill_fn = std::function<void(Eigen::Index, Eigen::Ref<Eigen::VectorXd>)>;

    q_provider() = default;

    explicit q_provider(Eigen::MatrixXd Q) : m_(Q.rows()), dense_(std::make_shared<Eigen::MatrixXd>(std::move(Q))) {
        if (dense_->rows() != dense_->cols()) throw domain_error("dual matrix must be square");
    }

    q_provider(Eigen::Index m, fill_fn fill) : m_(m), fill_(std::move(fill)) {}

    Eigen::Index size() const { return m_; }

    void fill_row(Eigen::Index i, Eigen::Ref<Eigen::VectorXd> out) const {
        if (dense_)
            out = dense_->row(i).transpose();
        else
            fill_(i, out);
    }

    double entry(Eigen::Index i, Eigen::Index j) const {
        if (dense_) return (*dense_)(i, j);
        Eigen::VectorXd row(m_);
        fill_(i, row);
        return row(j);
    }

    bool materialized() const { return dense_ != nullptr; }

  private:
    Eigen::Index m_ = 0;
    std::shared_ptr<const Eigen::MatrixXd> dense_;
    fill_fn fill_;
};

/// FIFO cache of Q rows. Serves copies, never references into the cache
/// storage, so eviction cannot invalidate a row a caller still holds.
class q_row_cache {
  public:
    q_row_cache(const q_provider& q, std::size_t capacity)
        : q_(q), capacity_(std::max<std::size_t>(capacity, 1)) {}

    void copy_row(Eigen::Index i, Eigen::VectorXd& out) {
        out.resize(q_.size());
        if (q_.materialized()) {  // dense rows are already free to read
            q_.fill_row(i, out);
            return;
        }
        auto it = slots_.find(i);
        if (it == slots_.end()) {
            Eigen::VectorXd row;
            if (order_.size() == capacity_) {
                auto victim = slots_.find(order_.front());
                order_.pop_front();
                row = std::move(victim->second);
                slots_.erase(victim);
            }
            row.resize(q_.size());
            q_.fill_row(i, row);
            it = slots_.emplace(i, std::move(row)).first;
            order_.push_back(i);
        }
        out = it->second;
    }

  private:
    const q_provider& q_;
    std::size_t capacity_;
    std::unordered_map<Eigen::Index, Eigen::VectorXd> slots_;
    std::deque<Eigen::Index> order_;
};

struct solver_progress {
    std::size_t pass;
    double violation;
    double objective;
};
using solver_log = std::function<void(const solver_progress&)>;

/// min 0.5 a'Qa - e'a  s.t.  y'a = 0,  0 <= a <= upper  (upper may be infinite).
struct dual_problem {
    q_provider Q;
    Eigen::VectorXd y;
    double upper = unbounded;
    double tol = 1e-3;
    std::size_t max_passes = 1'000'000;
    std::size_t cache_rows = 512;
    double objective_floor = -1e12;  // descent below this means the dual is unbounded
    double alpha_cap = 1e8;          // growth cap with infinite upper, same meaning
    solver_log log;

    void validate() const {
        if (Q.size() != y.size()) throw domain_error("dual matrix and label vector sizes differ");
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y(i) != 1.0 && y(i) != -1.0) throw domain_error("dual labels must be exactly +1 or -1");
        if (!(upper > 0.0)) throw domain_error("upper bound must be positive (or infinite)");
        if (!(tol > 0.0)) throw domain_error("tolerance must be positive");
        if (max_passes == 0) throw domain_error("max_passes must be positive");
    }
};

enum class solve_status { converged, max_iter, infeasible };

inline std::string to_string(solve_status s) {
    switch (s) {
        case solve_status::converged: return "converged";
        case solve_status::max_iter: return "max_iter";
        case solve_status::infeasible: return "infeasible";
    }
    return "unknown";
}

struct dual_solution {
    Eigen::VectorXd alpha;
    double objective = 0.0;
    double kkt_violation = 0.0;
    std::size_t iterations = 0;
    solve_status status = solve_status::converged;
};

namespace detail {

/// Maximal-violating-pair selection on f = y .* (Qa - e). A variable can move
/// down when (y=+1, a>0) or (y=-1, a<upper); up when (y=+1, a<upper) or
/// (y=-1, a>0). Returns {gap, i, j}; gap <= 0 certifies optimality. When either
/// side is empty no pair exists and the gap is 0 by convention.
struct violating_pair {
    double gap = 0.0;
    Eigen::Index i = -1;
    Eigen::Index j = -1;
};

inline violating_pair select_pair(const Eigen::VectorXd& y, const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& f, double upper) {
    violating_pair out;
    double best_up = -std::numeric_limits<double>::infinity();
    double best_dn = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        const bool positive = y(k) > 0.0;
        const bool can_dec = positive ? alpha(k) > 0.0 : alpha(k) < upper;
        const bool can_inc = positive ? alpha(k) < upper : alpha(k) > 0.0;
        if (can_dec && f(k) > best_up) {
            best_up = f(k);
            out.i = k;
        }
        if (can_inc && f(k) < best_dn) {
            best_dn = f(k);
            out.j = k;
        }
    }
    if (out.i < 0 || out.j < 0) return {};  // one side empty: nothing can move
    out.gap = best_up - best_dn;
    return out;
}

/// Exact KKT solve on the active face suggested by `alpha`: variables within a
/// snap distance of a bound are pinned there, the equality-constrained
/// quadratic is solved on the remaining free set, and the result replaces
/// `alpha` (with `grad` set to Q a - e) only when it is box feasible, balanced,
/// and its maximal-violating-pair gap meets `certificate`. First-order methods
/// identify the optimal face long before their steps can push the gap below
/// floating-point resolution, and the linear solve is backward stable even
/// when Q is badly conditioned, so this turns a near-solution into a certified
/// one. `row_of(k)` must yield row k of Q.
template <typename RowOf>
bool kkt_face_refine(const RowOf& row_of, const Eigen::VectorXd& y, double upper, double certificate,
                     Eigen::VectorXd& alpha, Eigen::VectorXd& grad) {
    const Eigen::Index m = y.size();
    const double scale =
        std::max({1.0, std::isfinite(upper) ? upper : 0.0, alpha.size() > 0 ? alpha.lpNorm<Eigen::Infinity>() : 0.0});
    for (const double eps : {1e-12, 1e-9, 1e-6}) {
        const double snap = eps * scale;
        Eigen::VectorXd cand = alpha;
        std::vector<Eigen::Index> free;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (cand(k) <= snap)
                cand(k) = 0.0;
            else if (cand(k) >= upper - snap)  // never true when upper is infinite
                cand(k) = upper;
            else
                free.push_back(k);
        }
        const auto f_count = static_cast<Eigen::Index>(free.size());
        if (f_count > 0) {
            Eigen::VectorXd pinned = cand;
            for (const Eigen::Index k : free) pinned(k) = 0.0;
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f_count + 1, f_count + 1);
            Eigen::VectorXd rhs(f_count + 1);
            for (Eigen::Index r = 0; r < f_count; ++r) {
                const auto& row = row_of(free[r]);
                for (Eigen::Index c = 0; c < f_count; ++c) kkt(r, c) = row(free[c]);
                kkt(r, f_count) = y(free[r]);
                kkt(f_count, r) = y(free[r]);
                rhs(r) = 1.0 - row.dot(pinned);
            }
            rhs(f_count) = -y.dot(pinned);

            const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
            if (!lu.isInvertible()) continue;
            Eigen::VectorXd x = lu.solve(rhs);
            x += lu.solve(rhs - kkt * x);  // one refinement step tightens the residual
            bool inside = true;
            for (Eigen::Index r = 0; r < f_count; ++r) inside = inside && x(r) >= 0.0 && x(r) <= upper;
            if (!inside) continue;
            for (Eigen::Index r = 0; r < f_count; ++r) cand(free[r]) = x(r);
        }
        if (std::abs(y.dot(cand)) > 1e-9 * std::max(1.0, cand.cwiseAbs().maxCoeff())) continue;
        Eigen::VectorXd g_cand(m);
        for (Eigen::Index k = 0; k < m; ++k) g_cand(k) = row_of(k).dot(cand) - 1.0;
        if (select_pair(y, cand, y.cwiseProduct(g_cand), upper).gap <= certificate) {
            alpha = std::move(cand);
            grad = std::move(g_cand);
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Two-variable working-set descent (sequential minimal optimization with
/// first-order pair selection). Each pass solves the 1-D subproblem along the
/// feasible direction (a_i += y_i t, a_j -= y_j t) in closed form, clips t to
/// the box, and snaps the binding variable exactly onto its face so the
/// equality constraint never drifts. Infinite upper bounds are handled
/// natively; an unbounded descent ray, runaway multipliers, or an objective
/// below the floor all report status = infeasible (the primal program admits
/// no separating solution). Pair updates converge slowly when Q is badly
/// conditioned (memorizing machines on near-duplicate points need huge
/// multipliers against tiny curvature), so at geometrically spaced passes the
/// solver tries an exact KKT solve on the face the iterate has settled on and
/// accepts it only when the gap certificate passes.
inline dual_solution solve_dual(const dual_problem& p) {
    p.validate();
    const Eigen::Index m = p.y.size();

    dual_solution sol;
    sol.alpha = Eigen::VectorXd::Zero(m);
    if (m == 0) return sol;

    Eigen::VectorXd g = Eigen::VectorXd::Constant(m, -1.0);  // Qa - e at a = 0
    Eigen::VectorXd f(m), qi(m), qj(m);
    q_row_cache cache(p.Q, p.cache_rows);

    Eigen::VectorXd polish_row;
    const auto row_of = [&](Eigen::Index k) -> const Eigen::VectorXd& {
        cache.copy_row(k, polish_row);
        return polish_row;
    };
    const auto refined = [&]() {
        if (!detail::kkt_face_refine(row_of, p.y, p.upper, p.tol, sol.alpha, g)) return false;
        f = p.y.cwiseProduct(g);
        sol.kkt_violation = detail::select_pair(p.y, sol.alpha, f, p.upper).gap;
        sol.objective = 0.5 * (sol.alpha.dot(g) - sol.alpha.sum());
        sol.status = solve_status::converged;
        return true;
    };
    std::size_t polish_interval = std::max<std::size_t>(static_cast<std::size_t>(m), 64);
    std::size_t next_polish = polish_interval;

    double prev_objective = std::numeric_limits<double>::infinity();
    for (std::size_t pass = 1; pass <= p.max_passes; ++pass) {
        sol.iterations = pass;
        f = p.y.cwiseProduct(g);
        const auto pair = detail::select_pair(p.y, sol.alpha, f, p.upper);
        sol.kkt_violation = pair.gap;
        sol.objective = 0.5 * (sol.alpha.dot(g) - sol.alpha.sum());
        if (p.log) p.log({pass, pair.gap, sol.objective});
        if (pair.gap <= p.tol) {
            sol.status = solve_status::converged;
            return sol;
        }
        if (pass >= next_polish) {
            polish_interval *= 2;
            next_polish = pass + polish_interval;
            if (refined()) return sol;
        }

        const Eigen::Index i = pair.i, j = pair.j;
        const double yi = p.y(i), yj = p.y(j);
        cache.copy_row(i, qi);
        cache.copy_row(j, qj);

        const double kappa = qi(i) + qj(j) - 2.0 * yi * yj * qi(j);
        if (kappa < -1e-8)
            throw curvature_error("dual matrix has negative curvature " + std::to_string(kappa) +
                                      " on working pair (" + std::to_string(i) + ", " + std::to_string(j) + ")",
                                  i, j);
        const double kappa_eff = std::max(kappa, 1e-12);
        const double t_star = -pair.gap / kappa_eff;  // < 0: moves a_i down, a_j up in f-order

        // Lower bound on t from the box; t = 0 is feasible so only this side can bind.
        // Each candidate remembers which variable hits which face.
        const double cand_i = yi > 0.0 ? -sol.alpha(i) : sol.alpha(i) - p.upper;
        const double cand_j = yj > 0.0 ? sol.alpha(j) - p.upper : -sol.alpha(j);
        const double t_lo = std::max(cand_i, cand_j);

        if (std::isinf(t_lo) && kappa <= 1e-12) {
            sol.status = solve_status::infeasible;  // flat unbounded descent ray
            return sol;
        }

        const double s = yi * sol.alpha(i) + yj * sol.alpha(j);  // conserved by the update
        const double t = std::max(t_star, t_lo);
        double ai = sol.alpha(i) + yi * t;
        double aj = sol.alpha(j) - yj * t;
        if (t == t_lo) {  // snap the binding variable exactly onto its face
            if (cand_i >= cand_j) {
                ai = yi > 0.0 ? 0.0 : p.upper;
                aj = yj * (s - yi * ai);
            } else {
                aj = yj > 0.0 ? p.upper : 0.0;
                ai = yi * (s - yj * aj);
            }
        }
        ai = std::clamp(ai, 0.0, p.upper);
        aj = std::clamp(aj, 0.0, p.upper);

        const double di = ai - sol.alpha(i);
        const double dj = aj - sol.alpha(j);
        sol.alpha(i) = ai;
        sol.alpha(j) = aj;
        g += di * qi + dj * qj;

        const double objective = 0.5 * (sol.alpha.dot(g) - sol.alpha.sum());
        assert(objective <= prev_objective + 1e-9 * std::max(1.0, std::abs(prev_objective)));
        prev_objective = objective;
        sol.objective = objective;

        if (objective < p.objective_floor ||
            (std::isinf(p.upper) && std::max(ai, aj) > p.alpha_cap)) {
            sol.status = solve_status::infeasible;
            return sol;
        }
    }

    f = p.y.cwiseProduct(g);
    sol.kkt_violation = detail::select_pair(p.y, sol.alpha, f, p.upper).gap;
    sol.objective = 0.5 * (sol.alpha.dot(g) - sol.alpha.sum());
    sol.status = solve_status::max_iter;
    return sol;
}

/// Optimality gap of a feasible alpha: max over movable-down f minus min over
/// movable-up f, where f = y .* (Qa - e). Non-positive at a global optimum.
/// Problems with no movable pair (single sample, one class) report 0.
inline double kkt_violation(const dual_problem& p, const Eigen::VectorXd& alpha) {
    p.validate();
    const Eigen::Index m = p.y.size();
    if (alpha.size() != m) throw domain_error("alpha size does not match the problem");
    for (Eigen::Index k = 0; k < m; ++k)
        if (alpha(k) < 0.0 || alpha(k) > p.upper)
            throw domain_error("alpha is outside the box at index " + std::to_string(k));

    Eigen::VectorXd g = Eigen::VectorXd::Constant(m, -1.0);
    Eigen::VectorXd row(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        p.Q.fill_row(k, row);
        g(k) += row.dot(alpha);
    }
    const Eigen::VectorXd f = p.y.cwiseProduct(g);
    return detail::select_pair(p.y, alpha, f, p.upper).gap;
}

/// Exact Euclidean projection onto {a : y'a = 0, 0 <= a <= upper}. The
/// multiplier beta solving y' clip(v - beta y) = 0 is found by bisection on a
/// monotone piecewise-linear function; the bracket [-B, B] always contains a
/// root. Requires a finite upper bound.
inline Eigen::VectorXd project_dual_feasible(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double upper) {
    if (!(upper > 0.0) || std::isinf(upper)) throw domain_error("projection requires a finite positive upper bound");
    const auto clipped = [&](double beta) { return (v - beta * y).cwiseMax(0.0).cwiseMin(upper).eval(); };
    double lo = -(v.cwiseAbs().maxCoeff() + upper + 1.0);
    double hi = -lo;
    for (int it = 0; it < 200 && lo < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (y.dot(clipped(mid)) >= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return clipped(0.5 * (lo + hi));
}

/// Verification oracle: projected-gradient descent with exact projection onto
/// the feasible set and exact line search along each projected step. Slow and
/// deliberately independent of the working-set solver. Test scale only:
/// m <= 16 and a finite upper bound (use 1e8 to stand in for unbounded).
inline dual_solution oracle_solve(const dual_problem& p) {
    p.validate();
    const Eigen::Index m = p.y.size();
    if (m > 16) throw domain_error("oracle_solve is restricted to m <= 16, got " + std::to_string(m));
    if (std::isinf(p.upper)) throw domain_error("oracle_solve requires a finite upper bound");

    dual_solution sol;
    sol.alpha = Eigen::VectorXd::Zero(m);
    if (m == 0) return sol;

    Eigen::MatrixXd Q(m, m);
    {
        Eigen::VectorXd row(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            p.Q.fill_row(k, row);
            Q.row(k) = row.transpose();
        }
    }
    const double L = std::max(Q.cwiseAbs().rowwise().sum().maxCoeff(), 1e-12);

    Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g(m), d(m);

    // Projected gradient alone cannot reach the certificate: close to the
    // optimum the projected step shrinks below floating-point resolution and
    // the gap plateaus around 1e-8. The face the iterate has settled on is
    // correct by then, so an exact KKT solve on that face (kept only when the
    // gap certificate passes) finishes the job.
    const auto row_of = [&](Eigen::Index k) -> Eigen::VectorXd { return Q.row(k).transpose(); };

    constexpr std::size_t max_iter = 1'000'000;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        g = Q * a - Eigen::VectorXd::Ones(m);
        const Eigen::VectorXd f = p.y.cwiseProduct(g);
        double gap = detail::select_pair(p.y, a, f, p.upper).gap;
        bool stalled = false;
        if (gap > 1e-9) {
            d = project_dual_feasible(a - (1.0 / L) * g, p.y, p.upper) - a;
            const double dqd = d.dot(Q * d);
            const double slope = g.dot(d);
            double t = 1.0;
            if (dqd > 0.0) t = std::clamp(-slope / dqd, 0.0, 1.0);
            stalled = t <= 0.0 || d.cwiseAbs().maxCoeff() == 0.0;
            if (!stalled) a += t * d;
        }
        if (gap > 1e-9 && (stalled || it % 64 == 0) &&
            detail::kkt_face_refine(row_of, p.y, p.upper, 1e-9, a, g)) {
            gap = detail::select_pair(p.y, a, p.y.cwiseProduct(g), p.upper).gap;
        }
        if (gap <= 1e-9) {
            sol.alpha = a;
            sol.objective = 0.5 * a.dot(g - Eigen::VectorXd::Ones(m));
            sol.kkt_violation = gap;
            sol.iterations = it;
            sol.status = solve_status::converged;
            return sol;
        }
        if (stalled) break;  // no certifiable progress left at this resolution
    }
    throw oracle_error("projected-gradient oracle failed to certify optimality within " +
                       std::to_string(max_iter) + " iterations");
}

}  // namespace gmm
