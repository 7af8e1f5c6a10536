#include "eigdist/nnls.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "eigdist/error.hpp"

namespace eigdist {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, const std::vector<bool>& passive) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
        if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Eigen::MatrixXd sub(r.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = r.col(cols[k]);
    const Eigen::VectorXd zs = sub.completeOrthogonalDecomposition().solve(y);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(r.cols());
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zs(static_cast<Eigen::Index>(k));
    return z;
}

}  // namespace

double nnls_kkt_residual(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    const Eigen::VectorXd g = r.transpose() * (y - r * w);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (w(j) < 0.0) worst = std::max(worst, -w(j));
        worst = std::max(worst, w(j) > 0.0 ? std::abs(g(j)) : std::max(g(j), 0.0));
    }
    return worst;
}

NnlsResult nnls(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, std::size_t max_iters) {
    if (r.rows() != y.size()) throw ShapeError("nnls: R has " + std::to_string(r.rows()) + " rows, y has " +
                                               std::to_string(y.size()));
    if (!r.allFinite() || !y.allFinite()) throw InputDomainError("nnls: non-finite input");
    const Eigen::Index n = r.cols();
    if (max_iters == 0) max_iters = 30 * static_cast<std::size_t>(std::max<Eigen::Index>(n, 1));

    NnlsResult out;
    out.w = Eigen::VectorXd::Zero(n);
    if (n == 0) return out;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> full(r);
    out.rank_deficient = full.rank() < n;

    const double scale = std::max(1.0, (r.transpose() * y).cwiseAbs().maxCoeff());
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Eigen::VectorXd& w = out.w;

    while (out.iterations < max_iters) {
        const Eigen::VectorXd g = r.transpose() * (y - r * w);
        Eigen::Index best = -1;
        double best_g = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && g(j) > best_g) {
                best_g = g(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        ++out.iterations;

        Eigen::VectorXd z = solve_passive(r, y, passive);
        if (z(best) <= 0.0) {
            // Numerically unhelpful column; drop it and stop to avoid cycling.
            passive[static_cast<std::size_t>(best)] = false;
            break;
        }
        for (;;) {
            double alpha = 1.0;
            bool blocked = false;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
                    alpha = std::min(alpha, w(j) / (w(j) - z(j)));
                    blocked = true;
                }
            }
            if (!blocked) break;
            w += alpha * (z - w);
            const double floor = 1e-14 * std::max(1.0, w.cwiseAbs().maxCoeff());
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && w(j) <= floor) {
                    passive[static_cast<std::size_t>(j)] = false;
                    w(j) = 0.0;
                }
            }
            z = solve_passive(r, y, passive);
        }
        w = z;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)]) w(j) = 0.0;
    }
    if (out.rank_deficient) {
        // Every column with a vanishing gradient can share the optimal fit;
        // prefer the minimum-norm weights over them when those stay feasible.
        const Eigen::VectorXd g = r.transpose() * (y - r * w);
        std::vector<bool> free(static_cast<std::size_t>(n));
        for (Eigen::Index j = 0; j < n; ++j) {
            free[static_cast<std::size_t>(j)] = passive[static_cast<std::size_t>(j)] || std::abs(g(j)) <= tol;
        }
        const Eigen::VectorXd z = solve_passive(r, y, free);
        if ((z.array() >= 0.0).all()) w = z;
    }
    out.kkt_residual = nnls_kkt_residual(r, y, w);
    return out;
}

}  // namespace eigdist
