#pragma once

#include <vector>

#include "eigdist/diffmodel.hpp"

namespace eigdist {

/// Eigendecomposition of a symmetric matrix.
struct SymmetricEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi rotations; `a` must be square and symmetric.
SymmetricEigen jacobi_eigen(Matrix a, double tol = 1e-14, std::size_t max_sweeps = 100);

/// Extremal Fisher eigenpairs from the dense finite-difference Jacobian:
/// the reference solution for small images (N <= kDenseJacobianLimit).
struct DenseEigenReport {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    Grid2 e_max;
    Grid2 e_min;
    /// Second-largest and second-smallest eigenvalues, for gap diagnostics.
    double lambda_second_max = 0.0;
    double lambda_second_min = 0.0;
    std::vector<double> spectrum;  // ascending
};

DenseEigenReport dense_fisher_eigen(const ModelChain& model, const Grid2& x, double h);

}  // namespace eigdist
