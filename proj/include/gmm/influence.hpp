#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gmm/error.hpp"

namespace gmm {

enum class influence_kind { rbf, ball, triangular, knn, identity };

inline std::string to_string(influence_kind k) {
    switch (k) {
        case influence_kind::rbf: return "rbf";
        case influence_kind::ball: return "ball";
        case influence_kind::triangular: return "triangular";
        case influence_kind::knn: return "knn";
        case influence_kind::identity: return "identity";
    }
    throw domain_error("unknown influence kind");
}

inline influence_kind influence_kind_from_string(const std::string& s) {
    if (s == "rbf") return influence_kind::rbf;
    if (s == "ball") return influence_kind::ball;
    if (s == "triangular") return influence_kind::triangular;
    if (s == "knn") return influence_kind::knn;
    if (s == "identity") return influence_kind::identity;
    throw domain_error("unknown influence kind: " + s);
}

/// Shape of the memory influence delta(x_j, x) each training point exerts:
///   rbf         exp(-sigma * ||x - x_j||^2)
///   ball        1 if ||x - x_j|| <= epsilon else 0   (epsilon = 0 matches only distance zero)
///   triangular  max(rho - ||x - x_j||, 0)
///   knn         1 if ||x - x_j|| <= radius_j else 0, radius_j frozen at fit time
///   identity    1 if x equals x_j coordinate-for-coordinate else 0
struct influence_spec {
    influence_kind kind = influence_kind::rbf;
    double sigma = 1.0;
    double epsilon = 0.0;
    double rho = 1.0;
    std::size_t k = 1;

    static influence_spec rbf(double sigma) {
        influence_spec s;
        s.kind = influence_kind::rbf;
        s.sigma = sigma;
        return s;
    }
    static influence_spec ball(double epsilon) {
        influence_spec s;
        s.kind = influence_kind::ball;
        s.epsilon = epsilon;
        return s;
    }
    static influence_spec triangular(double rho) {
        influence_spec s;
        s.kind = influence_kind::triangular;
        s.rho = rho;
        return s;
    }
    static influence_spec knn(std::size_t k) {
        influence_spec s;
        s.kind = influence_kind::knn;
        s.k = k;
        return s;
    }
    static influence_spec identity() {
        influence_spec s;
        s.kind = influence_kind::identity;
        return s;
    }

    void validate() const {
        switch (kind) {
            case influence_kind::rbf:
                if (!(sigma > 0.0) || !std::isfinite(sigma))
                    throw domain_error("rbf influence requires finite sigma > 0, got " + std::to_string(sigma));
                break;
            case influence_kind::ball:
                if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
                    throw domain_error("ball influence requires finite epsilon >= 0, got " +
                                       std::to_string(epsilon));
                break;
            case influence_kind::triangular:
                if (!(rho > 0.0) || !std::isfinite(rho))
                    throw domain_error("triangular influence requires finite rho > 0, got " + std::to_string(rho));
                break;
            case influence_kind::knn:
                if (k < 1) throw domain_error("knn influence requires k >= 1");
                break;
            case influence_kind::identity: break;
        }
    }
};

/// Influence frozen against a fixed anchor set (the training points).
/// For knn the per-anchor radii are computed once here and never refit,
/// so evaluations at new queries cannot shift the neighborhoods.
struct influence_model {
    influence_spec spec;
    Eigen::MatrixXd anchors;  // one row per training point
    Eigen::VectorXd radii;    // knn only: radius_j = distance to the k-th nearest other anchor

    Eigen::Index size() const { return anchors.rows(); }
};

inline influence_model fit_influence(const influence_spec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    spec.validate();
    influence_model model;
    model.spec = spec;
    model.anchors = X;
    if (spec.kind == influence_kind::knn) {
        const Eigen::Index m = X.rows();
        if (static_cast<Eigen::Index>(spec.k) > m - 1)
            throw domain_error("knn influence with k = " + std::to_string(spec.k) + " needs at least " +
                               std::to_string(spec.k + 1) + " training points, got " + std::to_string(m));
        model.radii.resize(m);
        std::vector<std::pair<double, Eigen::Index>> dist;
        dist.reserve(static_cast<std::size_t>(m) - 1);
        for (Eigen::Index j = 0; j < m; ++j) {
            dist.clear();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (i == j) continue;
                dist.emplace_back((X.row(i) - X.row(j)).norm(), i);
            }
            // k-th nearest other point; equal distances rank by lower index
            std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(spec.k) - 1, dist.end());
            model.radii(j) = dist[spec.k - 1].first;
        }
    }
    return model;
}

/// delta(x_j, x) for anchor j.
inline double eval_influence(const influence_model& model, Eigen::Index j,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (j < 0 || j >= model.size()) throw domain_error("anchor index " + std::to_string(j) + " out of range");
    if (x.size() != model.anchors.cols())
        throw domain_error("query has " + std::to_string(x.size()) + " features, anchors have " +
                           std::to_string(model.anchors.cols()));
    const auto anchor = model.anchors.row(j);
    switch (model.spec.kind) {
        case influence_kind::rbf: return std::exp(-model.spec.sigma * (x.transpose() - anchor).squaredNorm());
        case influence_kind::ball: return (x.transpose() - anchor).norm() <= model.spec.epsilon ? 1.0 : 0.0;
        case influence_kind::triangular: return std::max(model.spec.rho - (x.transpose() - anchor).norm(), 0.0);
        case influence_kind::knn: return (x.transpose() - anchor).norm() <= model.radii(j) ? 1.0 : 0.0;
        case influence_kind::identity: {
            for (Eigen::Index c = 0; c < anchor.size(); ++c)
                if (x(c) != anchor(c)) return 0.0;
            return 1.0;
        }
    }
    throw domain_error("unknown influence kind");
}

/// Delta(i, j) = delta(x_j, Xq.row(i)): row per query, column per anchor.
inline Eigen::MatrixXd influence_matrix(const influence_model& model, const Eigen::Ref<const Eigen::MatrixXd>& Xq) {
    Eigen::MatrixXd D(Xq.rows(), model.size());
    for (Eigen::Index i = 0; i < Xq.rows(); ++i)
        for (Eigen::Index j = 0; j < model.size(); ++j)
            D(i, j) = eval_influence(model, j, Xq.row(i).transpose());
    return D;
}

}  // namespace gmm
