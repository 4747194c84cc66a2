#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/solver.hpp"

namespace slisemap {

struct ColorBy {
    enum class Kind { Loss, Label, Coefficient };
    Kind kind = Kind::Loss;
    std::string coefficient;  // for Kind::Coefficient

    // "loss", "label" or "coefficient:NAME".
    static ColorBy parse(const std::string& spec);
};

struct KMeansResult {
    std::vector<int> assignment;
    Matrix centroids;
    int iterations = 0;
};

// Lloyd's algorithm seeded with k distinct rows picked by mt19937_64(seed).
// An emptied cluster keeps its previous centroid.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 300);

// Scatter plot of the first two embedding dimensions, one <circle> per item.
std::string embedding_svg(const Solution& sol, const ColorBy& color,
                          const std::optional<std::vector<int>>& labels = std::nullopt);

// Embedding coloured by k-means cluster of the local models, next to a bar
// chart of each cluster's centroid coefficients.
std::string model_clusters_svg(const Solution& sol, const KMeansResult& clusters);

}  // namespace slisemap
