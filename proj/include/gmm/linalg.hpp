#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "gmm/error.hpp"

namespace gmm {

/// Factor a symmetric positive semi-definite M as L * L^T.
/// Tries Cholesky of M + jitter*I with jitter escalating from 1e-10 by
/// factors of 100; if all attempts fail, falls back to the spectral factor
/// V * sqrt(max(Lambda, 0)), which tolerates slightly indefinite input.
inline Eigen::MatrixXd psd_factor(const Eigen::Ref<const Eigen::MatrixXd>& M) {
    if (M.rows() != M.cols()) throw domain_error("psd_factor requires a square matrix");
    const Eigen::Index n = M.rows();

    double jitter = 1e-10;
    for (int attempt = 0; attempt < 4; ++attempt, jitter *= 100.0) {
        Eigen::MatrixXd shifted = M;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    if (eig.info() != Eigen::Success) throw domain_error("psd_factor: eigendecomposition failed");
    Eigen::VectorXd scale(n);
    for (Eigen::Index i = 0; i < n; ++i) scale(i) = std::sqrt(std::max(eig.eigenvalues()(i), 0.0));
    return eig.eigenvectors() * scale.asDiagonal();
}

}  // namespace gmm
