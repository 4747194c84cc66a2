#include "support.hpp"

#include <filesystem>

#include <Eigen/QR>

namespace testing_support {

Matrix Rng::orthogonal(Index d) {
    Eigen::HouseholderQR<Matrix> qr(matrix(d, d));
    Matrix Q = qr.householderQ();
    return Q;
}

std::vector<TaskKind> all_tasks() {
    return {TaskKind::regression(), TaskKind::classification(3), TaskKind::binary_logit()};
}

Instance random_instance(Rng& rng, const TaskKind& task, Index n, Index m, Index d) {
    Instance inst;
    inst.task = task;
    inst.X.resize(n, m);
    inst.X.leftCols(m - 1) = rng.matrix(n, m - 1);
    inst.X.col(m - 1).setOnes();
    inst.B = rng.matrix(n, task.coef_count(static_cast<int>(m)), 0.7);
    inst.Z = rng.matrix(n, d);
    if (task.is_classification()) {
        inst.Y = rng.simplex_rows(n, task.classes);
    } else {
        inst.Y = rng.matrix(n, 1);
    }
    return inst;
}

long double oracle_pointwise_loss(const Matrix& X, const Matrix& Y, const Matrix& B, Index model, Index item,
                                  const TaskKind& task) {
    const Index m = X.cols();
    if (!task.is_classification()) {
        long double pred = 0.0L;
        for (Index c = 0; c < m; ++c) pred += static_cast<long double>(X(item, c)) * B(model, c);
        const long double r = pred - Y(item, 0);
        return r * r;
    }
    const int p = task.classes;
    std::vector<long double> eta(p, 0.0L);
    for (int k = 0; k + 1 < p; ++k)
        for (Index c = 0; c < m; ++c) eta[k] += static_cast<long double>(X(item, c)) * B(model, k * m + c);
    long double denom = 0.0L;
    for (int k = 0; k < p; ++k) denom += std::exp(eta[k]);
    long double affinity = 0.0L;
    for (int k = 0; k < p; ++k) affinity += std::sqrt(std::exp(eta[k]) / denom * Y(item, k));
    return 1.0L - affinity;
}

long double oracle_total_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, double lambda_z,
                              double lambda_lasso, const TaskKind& task) {
    const Index n = X.rows();
    long double total = 0.0L;
    for (Index i = 0; i < n; ++i) {
        std::vector<long double> w(static_cast<std::size_t>(n));
        long double denom = 0.0L;
        for (Index j = 0; j < n; ++j) {
            long double sq = 0.0L;
            for (Index c = 0; c < Z.cols(); ++c) {
                const long double diff = static_cast<long double>(Z(i, c)) - Z(j, c);
                sq += diff * diff;
            }
            w[j] = std::exp(-std::sqrt(sq));
            denom += w[j];
        }
        for (Index j = 0; j < n; ++j) total += w[j] / denom * oracle_pointwise_loss(X, Y, B, i, j, task);
    }
    for (Index i = 0; i < Z.rows(); ++i)
        for (Index c = 0; c < Z.cols(); ++c) total += lambda_z * static_cast<long double>(Z(i, c)) * Z(i, c);
    for (Index i = 0; i < B.rows(); ++i)
        for (Index c = 0; c < B.cols(); ++c) total += lambda_lasso * std::abs(static_cast<long double>(B(i, c)));
    return total;
}

void finite_difference_gradient(const Instance& inst, const slisemap::Hyperparams& hp, double h, Matrix& dB,
                                Matrix& dZ) {
    auto f = [&](const Matrix& B, const Matrix& Z) {
        return slisemap::total_loss(inst.X, inst.Y, B, Z, hp, inst.task);
    };
    dB.resize(inst.B.rows(), inst.B.cols());
    dZ.resize(inst.Z.rows(), inst.Z.cols());
    for (Index i = 0; i < inst.B.rows(); ++i) {
        for (Index c = 0; c < inst.B.cols(); ++c) {
            Matrix plus = inst.B, minus = inst.B;
            plus(i, c) += h;
            minus(i, c) -= h;
            dB(i, c) = (f(plus, inst.Z) - f(minus, inst.Z)) / (2 * h);
        }
    }
    for (Index i = 0; i < inst.Z.rows(); ++i) {
        for (Index c = 0; c < inst.Z.cols(); ++c) {
            Matrix plus = inst.Z, minus = inst.Z;
            plus(i, c) += h;
            minus(i, c) -= h;
            dZ(i, c) = (f(inst.B, plus) - f(inst.B, minus)) / (2 * h);
        }
    }
}

std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(SLISEMAP_TEST_SCRATCH) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace testing_support
