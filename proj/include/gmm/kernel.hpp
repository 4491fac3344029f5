#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "gmm/error.hpp"

namespace gmm {

enum class kernel_kind { linear, rbf };

inline std::string to_string(kernel_kind k) {
    switch (k) {
        case kernel_kind::linear: return "linear";
        case kernel_kind::rbf: return "rbf";
    }
    throw domain_error("unknown kernel kind");
}

inline kernel_kind kernel_kind_from_string(const std::string& s) {
    if (s == "linear") return kernel_kind::linear;
    if (s == "rbf") return kernel_kind::rbf;
    throw domain_error("unknown kernel kind: " + s);
}

/// K(x,z) = x.z (linear) or exp(-sigma * ||x-z||^2) (rbf, sigma > 0).
struct kernel_spec {
    kernel_kind kind = kernel_kind::rbf;
    double sigma = 1.0;  // rbf width; ignored for linear

    static kernel_spec linear() { return {kernel_kind::linear, 0.0}; }
    static kernel_spec rbf(double sigma) { return {kernel_kind::rbf, sigma}; }

    void validate() const {
        if (kind == kernel_kind::rbf) {
            if (!(sigma > 0.0) || !std::isfinite(sigma))
                throw domain_error("rbf kernel requires finite sigma > 0, got " + std::to_string(sigma));
        }
    }
};

inline double eval_kernel(const kernel_spec& spec, const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b) {
    switch (spec.kind) {
        case kernel_kind::linear: return a.dot(b);
        case kernel_kind::rbf: return std::exp(-spec.sigma * (a - b).squaredNorm());
    }
    throw domain_error("unknown kernel kind");
}

/// Symmetric Gram matrix over the rows of X. Entries are computed once per
/// unordered pair and mirrored, so the result is bitwise symmetric and the
/// rbf diagonal is exactly 1.
inline Eigen::MatrixXd gram(const kernel_spec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
    spec.validate();
    const Eigen::Index m = X.rows();
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        K(i, i) = spec.kind == kernel_kind::rbf ? 1.0 : X.row(i).squaredNorm();
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = eval_kernel(spec, X.row(i).transpose(), X.row(j).transpose());
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// Rectangular kernel matrix: out(i, j) = K(A.row(i), B.row(j)).
inline Eigen::MatrixXd cross_gram(const kernel_spec& spec, const Eigen::Ref<const Eigen::MatrixXd>& A,
                                  const Eigen::Ref<const Eigen::MatrixXd>& B) {
    spec.validate();
    Eigen::MatrixXd K(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            K(i, j) = eval_kernel(spec, A.row(i).transpose(), B.row(j).transpose());
    return K;
}

}  // namespace gmm
