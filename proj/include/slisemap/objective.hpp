#pragma once

#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/model.hpp"

/// The loss surface: embedding distances, soft neighbourhoods, pairwise local
/// losses and the regularised total with its analytic gradient.
namespace slisemap {

struct Hyperparams {
    double lambda_z = 0.1;
    double lambda_lasso = 1e-4;
    int d = 2;

    // lambda_z must be strictly positive, lambda_lasso nonnegative, d >= 1.
    void validate() const;
};

struct LossState {
    Matrix D;  // n x n embedding distances
    Matrix W;  // n x n row-stochastic soft neighbourhood weights
    Matrix L;  // n x n, L(i, j) = loss of local model i on item j
    double total = 0.0;
};

struct Gradients {
    Matrix dB;
    Matrix dZ;
};

// Offset inside the square root when differentiating distances, so coincident
// embedding rows have a finite derivative. Forward distances are exact.
inline constexpr double kDistanceGradEpsilon = 1e-12;

Matrix pairwise_distances(const Matrix& Z);

Matrix softmax_weights(const Matrix& D);

// Loss of every local model (rows of B) on every item (rows of X, Y): the
// result is B.rows() x X.rows().
Matrix local_loss_matrix(const Matrix& B, const Matrix& X, const Matrix& Y, const TaskKind& task);

// local_loss_matrix plus, per free logit k, the matrix of dL/d(eta_k) where
// eta_k = x^T b_k (a single matrix 2R for regression).
void local_losses_and_slopes(const Matrix& B, const Matrix& X, const Matrix& Y, const TaskKind& task, Matrix& L,
                             std::vector<Matrix>& slopes);

LossState evaluate_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                        const TaskKind& task);

double total_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                  const TaskKind& task);

Gradients loss_gradients(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                         const TaskKind& task);

// Fused value and gradient for the optimizer. Does not throw on non-finite
// values; the caller decides what a non-finite loss means.
double loss_and_gradients(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                          const TaskKind& task, Matrix& dB, Matrix& dZ);

// Per-item share of the total: sum_j W_ij L_ij + lambda_z |Z_i|^2 + lambda_lasso |B_i|_1.
// Sums to total_loss.
Vector row_contributions(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const Hyperparams& hp,
                         const TaskKind& task);

// Checks that X, Y, B, Z are mutually consistent for the task.
void check_shapes(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task);

}  // namespace slisemap
