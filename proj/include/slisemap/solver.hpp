#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/data.hpp"
#include "slisemap/model.hpp"
#include "slisemap/objective.hpp"
#include "slisemap/optimizer.hpp"

namespace slisemap {

struct SolverConfig {
    int max_outer_iters = 100;
    int lbfgs_history = 10;
    int lbfgs_max_iters = 500;
    double rel_tol = 1e-6;
    std::uint64_t seed = 0;
    bool escape = true;

    void validate() const;
    LbfgsOptions lbfgs_options() const;
};

struct Solution {
    Matrix X;  // n x m, normalised with intercept
    Matrix Y;  // n x response_dim, on the model scale
    Matrix B;  // n x q local model coefficients
    Matrix Z;  // n x d embedding
    Hyperparams hp;
    TaskKind task;
    double final_loss = 0.0;
    int outer_iters_used = 0;
    std::uint64_t seed = 0;
    bool numeric_warning = false;
    std::vector<double> loss_history;  // post-optimisation losses of accepted states

    // Carried through persistence so new raw rows can be transformed.
    std::vector<std::string> column_names;
    Normalization normalization;

    Index n() const { return X.rows(); }
};

struct InitialState {
    Matrix B;
    Matrix Z;
};

// Z0: the first d principal-component scores of the column-centred X (raw,
// unscaled); B0: i.i.d. standard normal entries from mt19937_64(seed).
InitialState init(const Matrix& X, const Matrix& Y, const Hyperparams& hp, const TaskKind& task, std::uint64_t seed);

// For every item i (rows of X, Y) picks k(i) = argmin_k sum_j W_kj L_ji, where
// W comes from Z and L_ji is the loss of local model j on item i, and returns
// the rows B_k(i), Z_k(i). All rows are read from the input (B, Z); ties go to
// the smallest k. X may hold items other than the ones B and Z belong to.
std::pair<Matrix, Matrix> escape(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z,
                                 const TaskKind& task);

// Indices k(i) used by escape.
std::vector<Index> escape_targets(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z,
                                  const TaskKind& task);

// Joint L-BFGS over the flattened (B, Z).
struct JointResult {
    Matrix B;
    Matrix Z;
    double loss = 0.0;
    LbfgsStatus status = LbfgsStatus::Converged;
};

JointResult minimize_joint(const Matrix& X, const Matrix& Y, const Matrix& B0, const Matrix& Z0,
                           const Hyperparams& hp, const TaskKind& task, const LbfgsOptions& options);

Solution fit(const Matrix& X, const Matrix& Y, const Hyperparams& hp, const TaskKind& task,
             const SolverConfig& config);

// Fits a Dataset and records its column names and normalisation on the Solution.
Solution fit(const Dataset& ds, const Hyperparams& hp, const SolverConfig& config);

struct NewPoints {
    Matrix B;       // rows for the new items
    Matrix Z;
    Vector losses;  // per-item contribution in the augmented problem (see row_contributions)
};

// Adds items (already normalised, intercept included) to a fitted solution.
// The old rows stay frozen. With one_by_one each item is added on its own
// against the original solution; otherwise all new rows are optimised jointly.
NewPoints add_new(const Solution& sol, const Matrix& X_new, const Matrix& Y_new, const SolverConfig& config,
                  bool one_by_one = false);

// Total loss of the solution extended with new rows (B_new, Z_new) for the
// items (X_new, Y_new), i.e. total_loss on the stacked problem, with the
// gradient for the new rows only. This is the objective add_new minimises.
double augmented_loss(const Solution& sol, const Matrix& X_new, const Matrix& Y_new, const Matrix& B_new,
                      const Matrix& Z_new, Matrix& dB, Matrix& dZ);

}  // namespace slisemap
