#include "eigdist/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eigdist/error.hpp"
#include "eigdist/fisher.hpp"

namespace eigdist {

SymmetricEigen jacobi_eigen(Matrix a, double tol, std::size_t max_sweeps) {
    if (a.rows != a.cols) throw ShapeError("jacobi_eigen: matrix must be square");
    const std::size_t n = a.rows;
    Matrix v = Matrix::identity(n);

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        }
        return std::sqrt(2.0 * s);
    };
    double total = 0.0;
    for (double x : a.data) total += x * x;
    const double scale_ref = std::sqrt(total);

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_norm() <= tol * scale_ref) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out;
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values.push_back(a(order[k], order[k]));
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

DenseEigenReport dense_fisher_eigen(const ModelChain& model, const Grid2& x, double h) {
    const Matrix jac = dense_jacobian_fd(model, x, h);
    const Matrix gram = jac.transpose() * jac;
    const SymmetricEigen eig = jacobi_eigen(gram);
    const std::size_t n = eig.values.size();

    auto column = [&](std::size_t k) {
        Grid2 g(x.height(), x.width());
        for (std::size_t i = 0; i < n; ++i) g.values()[i] = eig.vectors(i, k);
        normalize(g.values());
        canonicalize_sign(g);
        return g;
    };
    DenseEigenReport r;
    r.spectrum = eig.values;
    r.lambda_max = eig.values.back();
    r.lambda_min = std::max(0.0, eig.values.front());
    r.lambda_second_max = n > 1 ? eig.values[n - 2] : r.lambda_max;
    r.lambda_second_min = n > 1 ? eig.values[1] : r.lambda_min;
    r.e_max = column(n - 1);
    r.e_min = column(0);
    return r;
}

}  // namespace eigdist
