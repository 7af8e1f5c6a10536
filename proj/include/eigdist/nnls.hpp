#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace eigdist {

struct NnlsResult {
    Eigen::VectorXd w;
    /// max_j of the KKT violation: |g_j| where w_j > 0, max(g_j, 0) where
    /// w_j = 0, with g = R^T (y - R w).
    double kkt_residual = 0.0;
    /// R has linearly dependent columns. Inner solves are minimum-norm, and the
    /// result is the minimum-norm optimum over all zero-gradient columns when
    /// that optimum is feasible.
    bool rank_deficient = false;
    std::size_t iterations = 0;
};

/// min |R w - y|^2 subject to w >= 0, Lawson-Hanson active set method.
NnlsResult nnls(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, std::size_t max_iters = 0);

/// KKT violation of a candidate solution, as reported in NnlsResult.
double nnls_kkt_residual(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

}  // namespace eigdist
