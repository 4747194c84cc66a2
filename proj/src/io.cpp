#include "slisemap/io.hpp"

#include <fstream>
#include <sstream>

#include "slisemap/data.hpp"

namespace slisemap {

using nlohmann::json;

namespace {

json row_major(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix from_row_major(const json& rows, Index expected_rows, Index expected_cols, const char* what) {
    if (!rows.is_array() || static_cast<Index>(rows.size()) != expected_rows) {
        data_error(std::string("solution: field ") + what + " must have " + std::to_string(expected_rows) + " rows");
    }
    Matrix M(expected_rows, expected_cols);
    for (Index i = 0; i < expected_rows; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != expected_cols) {
            data_error(std::string("solution: row ") + std::to_string(i) + " of " + what + " must have " +
                       std::to_string(expected_cols) + " entries");
        }
        for (Index j = 0; j < expected_cols; ++j) M(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return M;
}

}  // namespace

json solution_to_json(const Solution& sol) {
    json doc;
    doc["task"] = sol.task.name();
    doc["n"] = sol.n();
    doc["m"] = sol.X.cols();
    doc["d"] = sol.Z.cols();
    doc["p"] = sol.task.response_dim();
    doc["lambda_z"] = sol.hp.lambda_z;
    doc["lambda_lasso"] = sol.hp.lambda_lasso;
    doc["column_names"] = sol.column_names;
    doc["normalization"] = {{"mean", sol.normalization.mean}, {"std", sol.normalization.stddev}};
    doc["B"] = row_major(sol.B);
    doc["Z"] = row_major(sol.Z);
    doc["final_loss"] = sol.final_loss;
    doc["seed"] = sol.seed;
    doc["outer_iters_used"] = sol.outer_iters_used;
    doc["loss_history"] = sol.loss_history;
    doc["numeric_warning"] = sol.numeric_warning;
    doc["X"] = row_major(sol.X);
    doc["Y"] = row_major(sol.Y);
    return doc;
}

Solution solution_from_json(const json& doc) {
    try {
        Solution sol;
        const int p = doc.at("p").get<int>();
        sol.task = TaskKind::parse(doc.at("task").get<std::string>(), p);
        const Index n = doc.at("n").get<Index>();
        const Index m = doc.at("m").get<Index>();
        const Index d = doc.at("d").get<Index>();
        sol.hp.lambda_z = doc.at("lambda_z").get<double>();
        sol.hp.lambda_lasso = doc.at("lambda_lasso").get<double>();
        sol.hp.d = static_cast<int>(d);
        sol.column_names = doc.at("column_names").get<std::vector<std::string>>();
        sol.normalization.mean = doc.at("normalization").at("mean").get<std::vector<double>>();
        sol.normalization.stddev = doc.at("normalization").at("std").get<std::vector<double>>();
        sol.B = from_row_major(doc.at("B"), n, sol.task.coef_count(static_cast<int>(m)), "B");
        sol.Z = from_row_major(doc.at("Z"), n, d, "Z");
        sol.X = from_row_major(doc.at("X"), n, m, "X");
        sol.Y = from_row_major(doc.at("Y"), n, sol.task.response_dim(), "Y");
        sol.final_loss = doc.at("final_loss").get<double>();
        sol.seed = doc.at("seed").get<std::uint64_t>();
        sol.outer_iters_used = doc.value("outer_iters_used", 0);
        sol.loss_history = doc.value("loss_history", std::vector<double>{});
        sol.numeric_warning = doc.value("numeric_warning", false);
        if (sol.normalization.mean.size() != sol.column_names.size() ||
            sol.normalization.stddev.size() != sol.column_names.size() ||
            static_cast<Index>(sol.column_names.size()) + 1 != m) {
            data_error("solution: column names and normalisation must cover m - 1 features");
        }
        return sol;
    } catch (const json::exception& e) {
        data_error(std::string("solution: malformed document: ") + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error("cannot write " + path);
    out << text;
    if (!out) data_error("error while writing " + path);
}

void save_solution(const Solution& sol, const std::string& path) { write_text(path, solution_to_json(sol).dump(1) + "\n"); }

Solution load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) data_error("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        data_error(path + ": invalid JSON: " + e.what());
    }
    return solution_from_json(doc);
}

json report_to_json(const MetricReport& r) {
    auto keyed = [](const std::map<int, double>& values) {
        json obj = json::object();
        for (const auto& [k, v] : values) obj[std::to_string(k)] = v;
        return obj;
    };
    json doc;
    doc["quantile"] = r.quantile;
    doc["threshold_l0"] = r.threshold_l0;
    doc["fidelity_point"] = r.fidelity_point;
    doc["fidelity_knn"] = keyed(r.fidelity_knn);
    doc["coverage_full"] = r.coverage_full;
    doc["coverage_knn"] = keyed(r.coverage_knn);
    if (r.purity_knn) doc["purity_knn"] = keyed(*r.purity_knn);
    doc["global"] = {{"fidelity_point", r.global_fidelity_point}, {"coverage_full", r.global_coverage_full}};
    return doc;
}

std::string report_to_csv(const MetricReport& r) {
    std::ostringstream out;
    out << "metric,k,value\n";
    auto line = [&](const std::string& metric, const std::string& k, double v) {
        out << metric << ',' << k << ',' << format_double(v) << '\n';
    };
    line("threshold_l0", "", r.threshold_l0);
    line("fidelity_point", "", r.fidelity_point);
    line("coverage_full", "", r.coverage_full);
    line("global_fidelity_point", "", r.global_fidelity_point);
    line("global_coverage_full", "", r.global_coverage_full);
    for (const auto& [k, v] : r.fidelity_knn) line("fidelity_knn", std::to_string(k), v);
    for (const auto& [k, v] : r.coverage_knn) line("coverage_knn", std::to_string(k), v);
    if (r.purity_knn) {
        for (const auto& [k, v] : *r.purity_knn) line("purity_knn", std::to_string(k), v);
    }
    return out.str();
}

std::vector<std::string> coefficient_names(const Solution& sol) {
    std::vector<std::string> base = sol.column_names;
    base.push_back(kInterceptName);
    if (!sol.task.is_classification()) return base;
    std::vector<std::string> out;
    for (int c = 0; c + 1 < sol.task.classes; ++c)
        for (const auto& name : base) out.push_back(name + "_c" + std::to_string(c + 1));
    return out;
}

}  // namespace slisemap
