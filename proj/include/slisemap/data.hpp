#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slisemap/common.hpp"
#include "slisemap/model.hpp"

/// Datasets: the synthetic clustered-regression generator, CSV ingestion and
/// the preprocessing pipeline (standardise columns, append an intercept,
/// subsample).
namespace slisemap {

// Per-column standardisation constants. Population standard deviation
// (divide by n); constant columns get stddev 1.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    std::size_t size() const { return mean.size(); }
};

inline const std::string kInterceptName = "intercept";

struct Dataset {
    Matrix X_raw;                           // n x m as ingested
    Matrix X;                               // n x (m + 1): standardised columns, then a column of ones
    Matrix Y;                               // n x response_dim (logit scale for BinaryLogit)
    Matrix Y_raw;                           // responses as ingested
    std::vector<std::string> column_names;  // m raw feature names (the intercept is implicit)
    std::vector<std::string> target_names;
    Normalization normalization;
    std::optional<std::vector<int>> labels;
    TaskKind task;

    Index size() const { return X.rows(); }
};

struct RsynthSpec {
    int n = 200;
    int m = 10;
    int k_clusters = 3;
    double s = 0.25;          // std of the cluster centroids
    double noise_std = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RsynthData {
    Dataset dataset;
    Matrix true_coefs;  // k x m, in raw feature coordinates
    Matrix centroids;   // k x m
};

// Draw order from a single mt19937_64 stream: all coefficient vectors, then
// all centroids, then per item (cluster, x, noise).
RsynthData generate_rsynth(const RsynthSpec& spec);

struct Normalized {
    Matrix X;
    Normalization normalization;
};

Normalized normalize(const Matrix& X_raw);

Vector normalize_row(const Eigen::Ref<const Vector>& x_raw, const Normalization& norm);
Matrix apply_normalization(const Matrix& X_raw, const Normalization& norm);

// Responses on the model scale: validated probabilities for classification,
// logits for BinaryLogit, unchanged for regression.
Matrix model_responses(const Matrix& Y_raw, const TaskKind& task);

// Builds a Dataset from raw covariates and responses as ingested
// (probabilities for classification and BinaryLogit; the latter are logit
// transformed here).
Dataset make_dataset(Matrix X_raw, Matrix Y_raw, std::vector<std::string> column_names,
                     std::vector<std::string> target_names, const TaskKind& task,
                     std::optional<std::vector<int>> labels = std::nullopt);

// A parsed numeric CSV table.
struct Table {
    std::vector<std::string> header;
    Matrix values;

    Index column(const std::string& name) const;  // throws a data error if absent
};

Table read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values);

struct CsvOptions {
    std::vector<std::string> targets;            // one column, or one per class for classification
    std::optional<std::string> label_column;     // ground-truth cluster ids; excluded from features
    std::vector<std::string> exclude;            // further non-feature columns
    TaskKind task = TaskKind::regression();
    bool one_hot = false;                        // classification from a single integer label column
};

// Columns of a CSV split into features, responses and labels, without any
// preprocessing. Zero data rows are allowed.
struct RawData {
    Matrix X_raw;
    Matrix Y_raw;
    std::vector<std::string> column_names;
    std::vector<std::string> target_names;
    std::optional<std::vector<int>> labels;
    TaskKind task;  // the class count is taken from the data for classification
};

RawData read_raw_csv(const std::string& path, const CsvOptions& options);

Dataset load_csv(const std::string& path, const CsvOptions& options);

// Writes the raw covariates and the responses (as ingested) to a CSV, plus a
// sidecar `<path>.normalization.json` holding the standardisation constants.
void export_dataset(const Dataset& ds, const std::string& path);

// Uniform sample without replacement of min(n, n0) rows, kept in original
// order; normalisation is recomputed on the sample.
Dataset subsample(const Dataset& ds, Index n0, std::uint64_t seed);

}  // namespace slisemap
