#include "slisemap/objective.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "slisemap/parallel.hpp"

namespace slisemap {

namespace {

// Pairwise losses of models (rows of B) on items (rows of X, Y). When
// `slopes` is given it receives, per free logit k, the matrix of dL/d(eta_k)
// for every (model, item) pair; for regression that is the single matrix 2R.
void pairwise_losses(const Matrix& B, const Matrix& X, const Matrix& Y, const TaskKind& task, Matrix& L,
                     std::vector<Matrix>* slopes) {
    const Index nb = B.rows();
    const Index nx = X.rows();
    const Index m = X.cols();

    if (!task.is_classification()) {
        Matrix R = B * X.transpose();
        L.resize(nb, nx);
        parallel_for(0, static_cast<std::size_t>(nx), [&](std::size_t jj) {
            const Index j = static_cast<Index>(jj);
            const double y = Y(j, 0);
            for (Index i = 0; i < nb; ++i) {
                const double r = R(i, j) - y;
                R(i, j) = r;
                L(i, j) = r * r;
            }
        });
        if (slopes) {
            slopes->assign(1, Matrix());
            (*slopes)[0] = 2.0 * R;
        }
        return;
    }

    const int p = task.classes;
    std::vector<Matrix> eta(p - 1);
    for (int c = 0; c + 1 < p; ++c) eta[c] = B.middleCols(c * m, m) * X.transpose();
    L.resize(nb, nx);
    if (slopes) slopes->assign(p - 1, Matrix(nb, nx));

    parallel_for(0, static_cast<std::size_t>(nx), [&](std::size_t jj) {
        const Index j = static_cast<Index>(jj);
        std::vector<double> s(p), root_y(p);
        for (int c = 0; c < p; ++c) root_y[c] = std::sqrt(std::max(0.0, Y(j, c)));
        for (Index i = 0; i < nb; ++i) {
            double top = 0.0;  // reference class logit
            for (int c = 0; c + 1 < p; ++c) top = std::max(top, eta[c](i, j));
            double denom = 0.0;
            for (int c = 0; c + 1 < p; ++c) {
                s[c] = std::exp(eta[c](i, j) - top);
                denom += s[c];
            }
            s[p - 1] = std::exp(-top);
            denom += s[p - 1];
            double affinity = 0.0;
            for (int c = 0; c < p; ++c) {
                s[c] /= denom;
                affinity += root_y[c] * std::sqrt(s[c]);
            }
            L(i, j) = 1.0 - affinity;
            if (slopes) {
                // d(1 - sum_c sqrt(y_c s_c)) / d eta_k = -1/2 (sqrt(y_k s_k) - s_k * affinity)
                for (int k = 0; k + 1 < p; ++k) {
                    (*slopes)[k](i, j) = -0.5 * (root_y[k] * std::sqrt(s[k]) - s[k] * affinity);
                }
            }
        }
    });
}

double lasso_norm(const Matrix& B) { return B.cwiseAbs().sum(); }

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

void Hyperparams::validate() const {
    if (!(lambda_z > 0.0) || !std::isfinite(lambda_z)) {
        usage_error("lambda_z must be a finite value > 0, got " + format_double(lambda_z));
    }
    if (!(lambda_lasso >= 0.0) || !std::isfinite(lambda_lasso)) {
        usage_error("lambda_lasso must be a finite value >= 0, got " + format_double(lambda_lasso));
    }
    if (d < 1) usage_error("embedding dimension d must be >= 1, got " + std::to_string(d));
}

void check_shapes(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task) {
    const Index n = X.rows();
    auto fail = [](const std::string& what) { data_error("shape mismatch: " + what); };
    if (Y.rows() != n) fail("Y has " + std::to_string(Y.rows()) + " rows, X has " + std::to_string(n));
    if (Y.cols() != task.response_dim()) {
        fail("Y has " + std::to_string(Y.cols()) + " columns, task " + task.name() + " expects " +
             std::to_string(task.response_dim()));
    }
    if (B.rows() != n) fail("B has " + std::to_string(B.rows()) + " rows, X has " + std::to_string(n));
    if (B.cols() != task.coef_count(static_cast<int>(X.cols()))) {
        fail("B has " + std::to_string(B.cols()) + " columns, expected " +
             std::to_string(task.coef_count(static_cast<int>(X.cols()))));
    }
    if (Z.rows() != n) fail("Z has " + std::to_string(Z.rows()) + " rows, X has " + std::to_string(n));
}

Matrix pairwise_distances(const Matrix& Z) {
    const Index n = Z.rows();
    const Matrix Zt = Z.transpose();  // one contiguous column per item
    Matrix D(n, n);
    for (Index j = 0; j < n; ++j) {
        D(j, j) = 0.0;
        for (Index i = j + 1; i < n; ++i) {
            const double dist = (Zt.col(i) - Zt.col(j)).norm();
            D(i, j) = dist;
            D(j, i) = dist;
        }
    }
    return D;
}

Matrix softmax_weights(const Matrix& D) {
    const Index n = D.rows();
    const Index cols = D.cols();
    const Vector shift = D.rowwise().minCoeff();  // max of -D per row
    Matrix W(n, cols);
    parallel_for(0, static_cast<std::size_t>(cols), [&](std::size_t kk) {
        const Index k = static_cast<Index>(kk);
        for (Index i = 0; i < n; ++i) W(i, k) = std::exp(shift[i] - D(i, k));
    });
    const Vector inv_sum = W.rowwise().sum().cwiseInverse();
    W = inv_sum.asDiagonal() * W;
    return W;
}

Matrix local_loss_matrix(const Matrix& B, const Matrix& X, const Matrix& Y, const TaskKind& task) {
    if (B.cols() != task.coef_count(static_cast<int>(X.cols()))) {
        data_error("local_loss_matrix: B has " + std::to_string(B.cols()) + " columns, expected " +
                   std::to_string(task.coef_count(static_cast<int>(X.cols()))));
    }
    if (Y.rows() != X.rows() || Y.cols() != task.response_dim()) {
        data_error("local_loss_matrix: Y is " + std::to_string(Y.rows()) + "x" + std::to_string(Y.cols()) +
                   ", expected " + std::to_string(X.rows()) + "x" + std::to_string(task.response_dim()));
    }
    Matrix L;
    pairwise_losses(B, X, Y, task, L, nullptr);
    return L;
}

void local_losses_and_slopes(const Matrix& B, const Matrix& X, const Matrix& Y, const TaskKind& task, Matrix& L,
                             std::vector<Matrix>& slopes) {
    pairwise_losses(B, X, Y, task, L, &slopes);
}

LossState evaluate_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                        const TaskKind& task) {
    check_shapes(X, Y, B, Z, task);
    LossState state;
    state.D = pairwise_distances(Z);
    state.W = softmax_weights(state.D);
    pairwise_losses(B, X, Y, task, state.L, nullptr);
    const double data_term = state.W.cwiseProduct(state.L).sum();
    const double z_term = hp.lambda_z * Z.squaredNorm();
    const double lasso_term = hp.lambda_lasso * lasso_norm(B);
    if (!std::isfinite(data_term)) numeric_error("total_loss: weighted local loss term is not finite");
    if (!std::isfinite(z_term)) numeric_error("total_loss: embedding regularisation term is not finite");
    if (!std::isfinite(lasso_term)) numeric_error("total_loss: lasso term is not finite");
    state.total = data_term + z_term + lasso_term;
    return state;
}

double total_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                  const TaskKind& task) {
    return evaluate_loss(X, Y, B, Z, hp, task).total;
}

double loss_and_gradients(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                          const TaskKind& task, Matrix& dB, Matrix& dZ) {
    const Index n = X.rows();
    const Index m = X.cols();

    const Matrix D = pairwise_distances(Z);
    const Matrix W = softmax_weights(D);
    Matrix L;
    std::vector<Matrix> slopes;
    pairwise_losses(B, X, Y, task, L, &slopes);

    // Row-wise weighted loss and G_ij = W_ij (L_ij - wl_i); the sensitivity of
    // sum_ij W_ij L_ij to D_ij is -G_ij.
    const Vector wl = W.cwiseProduct(L).rowwise().sum();
    const double data_term = wl.sum();

    Matrix C(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) C(i, j) = W(i, j) * (L(i, j) - wl[i]);
    }
    // C holds G, then is overwritten with the symmetric C_aj = -(G_aj + G_ja) / D_aj
    // (smoothed distance in the denominator).
    for (Index j = 0; j < n; ++j) {
        C(j, j) = 0.0;
        for (Index a = 0; a < j; ++a) {
            const double dist = std::sqrt(D(a, j) * D(a, j) + kDistanceGradEpsilon);
            const double v = -(C(a, j) + C(j, a)) / dist;
            C(a, j) = v;
            C(j, a) = v;
        }
    }
    const Vector c_rows = C.rowwise().sum();
    dZ = c_rows.asDiagonal() * Z - C * Z + (2.0 * hp.lambda_z) * Z;

    dB.resize(B.rows(), B.cols());
    for (std::size_t k = 0; k < slopes.size(); ++k) {
        dB.middleCols(static_cast<Index>(k) * m, m).noalias() = W.cwiseProduct(slopes[k]) * X;
    }
    if (hp.lambda_lasso > 0.0) dB += hp.lambda_lasso * B.unaryExpr([](double v) { return sign(v); });

    return data_term + hp.lambda_z * Z.squaredNorm() + hp.lambda_lasso * lasso_norm(B);
}

Gradients loss_gradients(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                         const TaskKind& task) {
    check_shapes(X, Y, B, Z, task);
    Gradients g;
    const double value = loss_and_gradients(X, Y, B, Z, hp, task, g.dB, g.dZ);
    if (!std::isfinite(value)) numeric_error("loss_gradients: loss is not finite");
    if (!g.dB.allFinite()) numeric_error("loss_gradients: gradient with respect to B is not finite");
    if (!g.dZ.allFinite()) numeric_error("loss_gradients: gradient with respect to Z is not finite");
    return g;
}

Vector row_contributions(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                         const TaskKind& task) {
    const LossState state = evaluate_loss(X, Y, B, Z, hp, task);
    Vector out = state.W.cwiseProduct(state.L).rowwise().sum();
    out += hp.lambda_z * Z.rowwise().squaredNorm();
    out += hp.lambda_lasso * B.cwiseAbs().rowwise().sum();
    return out;
}

}  // namespace slisemap
