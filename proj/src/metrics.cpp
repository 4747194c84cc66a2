#include "slisemap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>

#include "slisemap/objective.hpp"
#include "slisemap/optimizer.hpp"
#include "slisemap/parallel.hpp"

namespace slisemap {

namespace {

void check_k(int k, Index n) {
    if (k < 1) usage_error("neighbour count k must be >= 1, got " + std::to_string(k));
    if (k >= n) usage_error("neighbour count k = " + std::to_string(k) + " must be smaller than n = " + std::to_string(n));
}

double self_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const TaskKind& task, Index model, Index item) {
    return pointwise_loss(X.row(item).transpose(), B.row(model).transpose(), Y.row(item).transpose(), task);
}

}  // namespace

std::vector<std::vector<Index>> knn_indices(const Matrix& Z, int k) {
    const Index n = Z.rows();
    check_k(k, n);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t ii) {
        const Index i = static_cast<Index>(ii);
        std::vector<std::pair<double, Index>> cand;
        cand.reserve(static_cast<std::size_t>(n - 1));
        for (Index j = 0; j < n; ++j) {
            if (j != i) cand.emplace_back((Z.row(i) - Z.row(j)).squaredNorm(), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        auto& row = out[ii];
        row.reserve(static_cast<std::size_t>(k));
        for (int r = 0; r < k; ++r) row.push_back(cand[r].second);
    });
    return out;
}

Vector model_losses(const Matrix& X, const Matrix& Y, const Vector& b, const TaskKind& task) {
    return local_loss_matrix(b.transpose(), X, Y, task).row(0).transpose();
}

Vector fit_global_model(const Matrix& X, const Matrix& Y, const TaskKind& task, double lambda_lasso) {
    const Index n = X.rows();
    const int q = task.coef_count(static_cast<int>(X.cols()));
    if (n < q) warn("fit_global_model: fewer items than coefficients; the fit relies on the lasso penalty");
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    if (qr.rank() < X.cols()) warn("fit_global_model: X is rank deficient; returning the penalised solution");

    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix L;
    std::vector<Matrix> slopes;
    ObjectiveFn fn = [&](const Vector& b, Vector& grad) {
        local_losses_and_slopes(b.transpose(), X, Y, task, L, slopes);
        const Index m = X.cols();
        for (std::size_t c = 0; c < slopes.size(); ++c) {
            grad.segment(static_cast<Index>(c) * m, m) = inv_n * (slopes[c] * X).transpose();
        }
        double penalty = 0.0;
        if (lambda_lasso > 0.0) {
            for (Index i = 0; i < b.size(); ++i) {
                grad[i] += lambda_lasso * (b[i] > 0 ? 1.0 : (b[i] < 0 ? -1.0 : 0.0));
                penalty += std::abs(b[i]);
            }
        }
        return inv_n * L.sum() + lambda_lasso * penalty;
    };
    LbfgsOptions opt;
    opt.max_iters = 2000;
    opt.rel_tol = 1e-14;
    opt.grad_tol = 1e-12;
    return lbfgs_minimize(fn, Vector::Zero(q), opt).x;
}

double loss_threshold(std::vector<double> losses, double quantile) {
    if (losses.empty()) data_error("loss_threshold: no losses");
    if (!(quantile >= 0.0 && quantile <= 1.0)) usage_error("quantile must lie in [0, 1]");
    std::sort(losses.begin(), losses.end());
    const double h = quantile * static_cast<double>(losses.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, losses.size() - 1);
    return losses[lo] + (h - static_cast<double>(lo)) * (losses[hi] - losses[lo]);
}

double cluster_purity(const Matrix& Z, const std::vector<int>& labels, int k) {
    const Index n = Z.rows();
    if (static_cast<Index>(labels.size()) != n) {
        data_error("cluster_purity: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " items");
    }
    const auto nn = knn_indices(Z, k);
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        int same = 0;
        for (Index j : nn[i]) same += labels[j] == labels[i];
        total += static_cast<double>(same) / k;
    }
    return total / static_cast<double>(n);
}

double fidelity(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task,
                const Neighbourhood& hood) {
    const Index n = X.rows();
    if (n == 0) data_error("fidelity: empty solution");
    double total = 0.0;
    switch (hood.kind) {
        case Neighbourhood::Kind::Point:
            for (Index i = 0; i < n; ++i) total += self_loss(X, Y, B, task, i, i);
            break;
        case Neighbourhood::Kind::Knn: {
            const auto nn = knn_indices(Z, hood.k);
            for (Index i = 0; i < n; ++i) {
                double row = 0.0;
                for (Index j : nn[i]) row += self_loss(X, Y, B, task, i, j);
                total += row / hood.k;
            }
            break;
        }
        case Neighbourhood::Kind::Full: {
            const Matrix L = local_loss_matrix(B, X, Y, task);
            total = L.rowwise().mean().sum();
            break;
        }
    }
    return total / static_cast<double>(n);
}

double fidelity(const Solution& sol, const Neighbourhood& hood) {
    return fidelity(sol.X, sol.Y, sol.B, sol.Z, sol.task, hood);
}

double coverage(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task, double l0,
                const Neighbourhood& hood) {
    if (std::isnan(l0)) usage_error("coverage: threshold is NaN");
    const Index n = X.rows();
    if (n == 0) data_error("coverage: empty solution");
    const Matrix L = local_loss_matrix(B, X, Y, task);
    double total = 0.0;
    switch (hood.kind) {
        case Neighbourhood::Kind::Point:
            for (Index i = 0; i < n; ++i) total += L(i, i) < l0;
            break;
        case Neighbourhood::Kind::Full:
            for (Index i = 0; i < n; ++i) total += static_cast<double>((L.row(i).array() < l0).count()) / n;
            break;
        case Neighbourhood::Kind::Knn: {
            const auto nn = knn_indices(Z, hood.k);
            for (Index i = 0; i < n; ++i) {
                int hit = 0;
                for (Index j : nn[i]) hit += L(i, j) < l0;
                total += static_cast<double>(hit) / hood.k;
            }
            break;
        }
    }
    return total / static_cast<double>(n);
}

double coverage(const Solution& sol, double l0, const Neighbourhood& hood) {
    return coverage(sol.X, sol.Y, sol.B, sol.Z, sol.task, l0, hood);
}

MetricReport compute_report(const Solution& sol, const std::vector<int>& ks, const std::optional<std::vector<int>>& labels,
                            double quantile) {
    MetricReport r;
    r.quantile = quantile;
    const Vector global = fit_global_model(sol.X, sol.Y, sol.task, sol.hp.lambda_lasso);
    const Vector gl = model_losses(sol.X, sol.Y, global, sol.task);
    r.threshold_l0 = loss_threshold(std::vector<double>(gl.data(), gl.data() + gl.size()), quantile);

    const Matrix B_global = global.transpose().replicate(sol.n(), 1);
    r.global_fidelity_point = fidelity(sol.X, sol.Y, B_global, sol.Z, sol.task, Neighbourhood::point());
    r.global_coverage_full = coverage(sol.X, sol.Y, B_global, sol.Z, sol.task, r.threshold_l0, Neighbourhood::full());

    r.fidelity_point = fidelity(sol, Neighbourhood::point());
    r.coverage_full = coverage(sol, r.threshold_l0, Neighbourhood::full());
    if (labels) r.purity_knn.emplace();
    for (int k : ks) {
        r.fidelity_knn[k] = fidelity(sol, Neighbourhood::knn(k));
        r.coverage_knn[k] = coverage(sol, r.threshold_l0, Neighbourhood::knn(k));
        if (labels) (*r.purity_knn)[k] = cluster_purity(sol.Z, *labels, k);
    }
    return r;
}

}  // namespace slisemap
