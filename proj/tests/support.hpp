#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/model.hpp"
#include "slisemap/objective.hpp"

namespace testing_support {

using slisemap::Index;
using slisemap::Matrix;
using slisemap::TaskKind;
using slisemap::TaskType;
using slisemap::Vector;

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }

    Matrix matrix(Index rows, Index cols, double scale = 1.0) {
        Matrix M(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) M(i, j) = scale * normal();
        return M;
    }

    // Rows on the probability simplex, bounded away from zero.
    Matrix simplex_rows(Index rows, int p) {
        Matrix M(rows, p);
        for (Index i = 0; i < rows; ++i) {
            for (int c = 0; c < p; ++c) M(i, c) = uniform(0.05, 1.0);
            M.row(i) /= M.row(i).sum();
        }
        return M;
    }

    // Haar-ish random orthogonal matrix via QR of a Gaussian matrix.
    Matrix orthogonal(Index d);
};

struct Instance {
    Matrix X, Y, B, Z;
    TaskKind task;
};

// X gets a trailing intercept column of ones.
Instance random_instance(Rng& rng, const TaskKind& task, Index n, Index m, Index d);

// The three task kinds the library supports, with classification at p = 3.
std::vector<TaskKind> all_tasks();

// Independent scalar re-implementations, evaluated in long double.
long double oracle_pointwise_loss(const Matrix& X, const Matrix& Y, const Matrix& B, Index model, Index item,
                                  const TaskKind& task);
long double oracle_total_loss(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, double lambda_z,
                              double lambda_lasso, const TaskKind& task);

// Central finite-difference gradient of total_loss with step h.
void finite_difference_gradient(const Instance& inst, const slisemap::Hyperparams& hp, double h, Matrix& dB,
                                Matrix& dZ);

// Path of a fresh scratch directory under the build tree.
std::string scratch_dir(const std::string& name);

}  // namespace testing_support
