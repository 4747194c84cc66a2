#include "slisemap/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace slisemap {

void RsynthSpec::validate() const {
    if (k_clusters < 1) usage_error("rsynth: number of clusters must be >= 1");
    if (n < k_clusters) usage_error("rsynth: n must be >= number of clusters");
    if (m < 1) usage_error("rsynth: m must be >= 1");
    if (!(s >= 0.0)) usage_error("rsynth: centroid std must be >= 0");
    if (!(noise_std >= 0.0)) usage_error("rsynth: noise std must be >= 0");
}

RsynthData generate_rsynth(const RsynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, spec.k_clusters - 1);

    RsynthData out;
    out.true_coefs.resize(spec.k_clusters, spec.m);
    out.centroids.resize(spec.k_clusters, spec.m);
    for (int j = 0; j < spec.k_clusters; ++j)
        for (int c = 0; c < spec.m; ++c) out.true_coefs(j, c) = normal(rng);
    for (int j = 0; j < spec.k_clusters; ++j)
        for (int c = 0; c < spec.m; ++c) out.centroids(j, c) = spec.s * normal(rng);

    Matrix X(spec.n, spec.m);
    Matrix Y(spec.n, 1);
    std::vector<int> labels(spec.n);
    for (int i = 0; i < spec.n; ++i) {
        const int j = pick(rng);
        labels[i] = j;
        for (int c = 0; c < spec.m; ++c) X(i, c) = out.centroids(j, c) + normal(rng);
        Y(i, 0) = X.row(i).dot(out.true_coefs.row(j)) + spec.noise_std * normal(rng);
    }

    std::vector<std::string> names(spec.m);
    for (int c = 0; c < spec.m; ++c) names[c] = "x" + std::to_string(c + 1);
    out.dataset = make_dataset(std::move(X), std::move(Y), std::move(names), {"y"}, TaskKind::regression(),
                               std::move(labels));
    return out;
}

Normalized normalize(const Matrix& X_raw) {
    const Index n = X_raw.rows();
    const Index m = X_raw.cols();
    if (n < 1) data_error("normalize: need at least one row");
    Normalized out;
    out.normalization.mean.resize(m);
    out.normalization.stddev.resize(m);
    out.X.resize(n, m + 1);
    for (Index c = 0; c < m; ++c) {
        const double mean = X_raw.col(c).mean();
        const double var = (X_raw.col(c).array() - mean).square().sum() / static_cast<double>(n);
        double sd = std::sqrt(var);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            warn("normalize: column " + std::to_string(c) + " is constant; it becomes all zeros");
            sd = 1.0;
        }
        out.normalization.mean[c] = mean;
        out.normalization.stddev[c] = sd;
        out.X.col(c) = (X_raw.col(c).array() - mean) / sd;
    }
    out.X.col(m).setOnes();
    return out;
}

Vector normalize_row(const Eigen::Ref<const Vector>& x_raw, const Normalization& norm) {
    const Index m = static_cast<Index>(norm.size());
    if (x_raw.size() != m) {
        data_error("normalize_row: expected " + std::to_string(m) + " values, got " + std::to_string(x_raw.size()));
    }
    Vector out(m + 1);
    for (Index c = 0; c < m; ++c) out[c] = (x_raw[c] - norm.mean[c]) / norm.stddev[c];
    out[m] = 1.0;
    return out;
}

Matrix apply_normalization(const Matrix& X_raw, const Normalization& norm) {
    const Index m = static_cast<Index>(norm.size());
    if (X_raw.cols() != m) {
        data_error("apply_normalization: expected " + std::to_string(m) + " columns, got " +
                   std::to_string(X_raw.cols()));
    }
    Matrix out(X_raw.rows(), m + 1);
    for (Index c = 0; c < m; ++c) out.col(c) = (X_raw.col(c).array() - norm.mean[c]) / norm.stddev[c];
    out.col(m).setOnes();
    return out;
}

Matrix model_responses(const Matrix& Y_raw, const TaskKind& task) {
    Matrix Y;
    switch (task.type) {
        case TaskType::Regression:
            if (Y_raw.cols() != 1) data_error("regression needs exactly one target column");
            Y = Y_raw;
            break;
        case TaskType::BinaryLogit:
            if (Y_raw.cols() != 1) data_error("binary-logit needs exactly one probability column");
            Y = Y_raw.unaryExpr([](double p) { return logit_transform(p); });
            break;
        case TaskType::Classification:
            if (Y_raw.cols() != task.classes) {
                data_error("classification with " + std::to_string(task.classes) + " classes needs as many target columns, got " +
                           std::to_string(Y_raw.cols()));
            }
            for (Index i = 0; i < Y_raw.rows(); ++i) {
                if ((Y_raw.row(i).array() < 0.0).any()) data_error("row " + std::to_string(i + 1) + ": negative class probability");
                if (std::abs(Y_raw.row(i).sum() - 1.0) > 1e-6) {
                    data_error("row " + std::to_string(i + 1) + ": class probabilities do not sum to 1");
                }
            }
            Y = Y_raw;
            break;
    }
    if (!Y.allFinite()) data_error("dataset: non-finite response");
    return Y;
}

Dataset make_dataset(Matrix X_raw, Matrix Y_raw, std::vector<std::string> column_names,
                     std::vector<std::string> target_names, const TaskKind& task,
                     std::optional<std::vector<int>> labels) {
    if (Y_raw.rows() != X_raw.rows()) data_error("dataset: X and Y have different row counts");
    if (static_cast<Index>(column_names.size()) != X_raw.cols()) data_error("dataset: column name count mismatch");
    if (labels && static_cast<Index>(labels->size()) != X_raw.rows()) data_error("dataset: label count mismatch");
    if (X_raw.rows() == 0) data_error("dataset: no data rows");
    if (!X_raw.allFinite()) data_error("dataset: non-finite covariate");

    Dataset ds;
    ds.task = task;
    ds.Y = model_responses(Y_raw, task);
    Normalized nx = normalize(X_raw);
    ds.X = std::move(nx.X);
    ds.normalization = std::move(nx.normalization);
    ds.X_raw = std::move(X_raw);
    ds.Y_raw = std::move(Y_raw);
    ds.column_names = std::move(column_names);
    ds.target_names = std::move(target_names);
    ds.labels = std::move(labels);
    return ds;
}

Index Table::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) data_error("column \"" + name + "\" not found");
    return static_cast<Index>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) data_error("cannot open " + path);
    Table table;
    std::string line;
    if (!std::getline(in, line)) data_error(path + ": empty file (header row required)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    for (auto& h : split_line(line)) table.header.push_back(trim(h));
    const std::size_t width = table.header.size();

    std::vector<double> cells;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        auto fields = split_line(line);
        if (fields.size() > width) data_error(path + ": row " + std::to_string(row) + " has more cells than the header");
        for (std::size_t c = 0; c < width; ++c) {
            const std::string cell = c < fields.size() ? trim(fields[c]) : std::string();
            if (cell.empty()) {
                data_error(path + ": missing value at row " + std::to_string(row) + ", column \"" + table.header[c] + "\"");
            }
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                data_error(path + ": non-numeric value \"" + cell + "\" at row " + std::to_string(row) + ", column \"" +
                           table.header[c] + "\"");
            }
            cells.push_back(v);
        }
    }
    table.values.resize(static_cast<Index>(row), static_cast<Index>(width));
    for (std::size_t r = 0; r < row; ++r)
        for (std::size_t c = 0; c < width; ++c) table.values(r, c) = cells[r * width + c];
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values) {
    if (static_cast<Index>(header.size()) != values.cols()) data_error("write_csv: header/column count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
        out << '\n';
    }
    if (!out) data_error("error while writing " + path);
}

RawData read_raw_csv(const std::string& path, const CsvOptions& options) {
    const Table table = read_csv(path);
    if (options.targets.empty()) usage_error("load_csv: no target column given");

    std::set<Index> reserved;
    std::vector<Index> target_idx;
    for (const auto& t : options.targets) {
        target_idx.push_back(table.column(t));
        reserved.insert(target_idx.back());
    }
    std::optional<Index> label_idx;
    if (options.label_column) {
        label_idx = table.column(*options.label_column);
        reserved.insert(*label_idx);
    }
    for (const auto& e : options.exclude) reserved.insert(table.column(e));

    std::vector<Index> feature_idx;
    std::vector<std::string> names;
    for (Index c = 0; c < static_cast<Index>(table.header.size()); ++c) {
        if (reserved.count(c)) continue;
        feature_idx.push_back(c);
        names.push_back(table.header[c]);
    }
    if (feature_idx.empty()) data_error(path + ": no feature columns left after removing targets");
    const Index n = table.values.rows();

    Matrix X(n, static_cast<Index>(feature_idx.size()));
    for (std::size_t c = 0; c < feature_idx.size(); ++c) X.col(c) = table.values.col(feature_idx[c]);

    TaskKind task = options.task;
    Matrix Y;
    std::vector<std::string> target_names = options.targets;
    if (options.one_hot) {
        if (target_idx.size() != 1) usage_error("--one-hot needs exactly one target column");
        int max_label = 0;
        for (Index i = 0; i < n; ++i) {
            const double v = table.values(i, target_idx[0]);
            if (v < 0 || v != std::floor(v)) {
                data_error(path + ": row " + std::to_string(i + 1) + ": class label must be a nonnegative integer");
            }
            max_label = std::max(max_label, static_cast<int>(v));
        }
        const int p = std::max({2, max_label + 1, task.is_classification() ? task.classes : 0});
        task = TaskKind::classification(p);
        Y = Matrix::Zero(n, p);
        for (Index i = 0; i < n; ++i) Y(i, static_cast<Index>(table.values(i, target_idx[0]))) = 1.0;
        target_names.clear();
        for (int c = 0; c < p; ++c) target_names.push_back(options.targets[0] + "_" + std::to_string(c));
    } else {
        if (task.is_classification()) task = TaskKind::classification(static_cast<int>(target_idx.size()));
        Y.resize(n, static_cast<Index>(target_idx.size()));
        for (std::size_t c = 0; c < target_idx.size(); ++c) Y.col(c) = table.values.col(target_idx[c]);
    }

    std::optional<std::vector<int>> labels;
    if (label_idx) {
        labels.emplace(n);
        for (Index i = 0; i < n; ++i) (*labels)[i] = static_cast<int>(table.values(i, *label_idx));
    }
    RawData raw;
    raw.X_raw = std::move(X);
    raw.Y_raw = std::move(Y);
    raw.column_names = std::move(names);
    raw.target_names = std::move(target_names);
    raw.labels = std::move(labels);
    raw.task = task;
    return raw;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
    RawData raw = read_raw_csv(path, options);
    if (raw.X_raw.rows() == 0) data_error(path + ": no data rows");
    return make_dataset(std::move(raw.X_raw), std::move(raw.Y_raw), std::move(raw.column_names),
                        std::move(raw.target_names), raw.task, std::move(raw.labels));
}

void export_dataset(const Dataset& ds, const std::string& path) {
    std::vector<std::string> header = ds.column_names;
    header.insert(header.end(), ds.target_names.begin(), ds.target_names.end());
    Matrix values(ds.X_raw.rows(), ds.X_raw.cols() + ds.Y_raw.cols());
    values << ds.X_raw, ds.Y_raw;
    write_csv(path, header, values);

    nlohmann::json side;
    side["columns"] = ds.column_names;
    side["targets"] = ds.target_names;
    side["task"] = ds.task.name();
    side["mean"] = ds.normalization.mean;
    side["std"] = ds.normalization.stddev;
    std::ofstream out(path + ".normalization.json", std::ios::binary);
    if (!out) data_error("cannot write " + path + ".normalization.json");
    out << side.dump(2) << '\n';
}

Dataset subsample(const Dataset& ds, Index n0, std::uint64_t seed) {
    if (n0 < 1) usage_error("subsample: n0 must be >= 1");
    const Index n = ds.size();
    if (n0 >= n) return ds;

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (Index i = 0; i < n0; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<Index> chosen(order.begin(), order.begin() + n0);
    std::sort(chosen.begin(), chosen.end());

    Matrix X_raw(n0, ds.X_raw.cols());
    Matrix Y_raw(n0, ds.Y_raw.cols());
    std::optional<std::vector<int>> labels;
    if (ds.labels) labels.emplace(n0);
    for (Index r = 0; r < n0; ++r) {
        X_raw.row(r) = ds.X_raw.row(chosen[r]);
        Y_raw.row(r) = ds.Y_raw.row(chosen[r]);
        if (labels) (*labels)[r] = (*ds.labels)[chosen[r]];
    }
    return make_dataset(std::move(X_raw), std::move(Y_raw), ds.column_names, ds.target_names, ds.task, std::move(labels));
}

}  // namespace slisemap
