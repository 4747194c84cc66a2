#pragma once

#include <map>
#include <optional>
#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/model.hpp"
#include "slisemap/solver.hpp"

/// Quality measures for a fitted embedding: cluster purity, fidelity and
/// coverage of the local models, and the global reference model that sets the
/// coverage threshold. All neighbourhoods are Euclidean k-NN in the embedding
/// with the query item excluded and distance ties broken by smaller index.
namespace slisemap {

struct Neighbourhood {
    enum class Kind { Point, Full, Knn };
    Kind kind = Kind::Point;
    int k = 0;

    static Neighbourhood point() { return {Kind::Point, 0}; }
    static Neighbourhood full() { return {Kind::Full, 0}; }
    static Neighbourhood knn(int k) { return {Kind::Knn, k}; }
};

// For each row of Z, the indices of its k nearest other rows, nearest first.
std::vector<std::vector<Index>> knn_indices(const Matrix& Z, int k);

// Single white-box model minimising (1/n) sum_j l(g(x_j), y_j) + lambda_lasso |b|_1.
Vector fit_global_model(const Matrix& X, const Matrix& Y, const TaskKind& task, double lambda_lasso = 1e-4);

// Loss of one model on every item.
Vector model_losses(const Matrix& X, const Matrix& Y, const Vector& b, const TaskKind& task);

// Empirical quantile with linear interpolation between order statistics.
double loss_threshold(std::vector<double> losses, double quantile = 0.3);

double cluster_purity(const Matrix& Z, const std::vector<int>& labels, int k);

// Fidelity: Point -> mean of l(g_i(x_i), y_i); Knn(k) -> mean over i of the
// mean loss of model i on its k neighbours.
double fidelity(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task,
                const Neighbourhood& hood);
double fidelity(const Solution& sol, const Neighbourhood& hood);

// Coverage: fraction of (model i, item j) pairs with loss below l0, where j
// ranges over all items (Full) or the k neighbours of i (Knn).
double coverage(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z, const TaskKind& task, double l0,
                const Neighbourhood& hood);
double coverage(const Solution& sol, double l0, const Neighbourhood& hood);

struct MetricReport {
    double fidelity_point = 0.0;
    std::map<int, double> fidelity_knn;
    double coverage_full = 0.0;
    std::map<int, double> coverage_knn;
    std::optional<std::map<int, double>> purity_knn;
    double threshold_l0 = 0.0;
    double quantile = 0.3;
    // The global reference model evaluated the same way.
    double global_fidelity_point = 0.0;
    double global_coverage_full = 0.0;
};

MetricReport compute_report(const Solution& sol, const std::vector<int>& ks,
                            const std::optional<std::vector<int>>& labels = std::nullopt, double quantile = 0.3);

}  // namespace slisemap
