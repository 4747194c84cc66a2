#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "slisemap/metrics.hpp"
#include "slisemap/solver.hpp"

namespace slisemap {

// Solution document: task, shape, hyperparameters, column names,
// normalisation, row-major B and Z, final loss and seed. X and Y (model scale)
// are stored as well so that a loaded solution can be extended and scored.
// Doubles are written in shortest round-trip form.
nlohmann::json solution_to_json(const Solution& sol);
Solution solution_from_json(const nlohmann::json& doc);

void save_solution(const Solution& sol, const std::string& path);
Solution load_solution(const std::string& path);

nlohmann::json report_to_json(const MetricReport& report);

// One row per (metric, k); k is empty for metrics without a neighbourhood.
std::string report_to_csv(const MetricReport& report);

// Names of the columns of B: feature names then "intercept", suffixed with
// the class index for classification.
std::vector<std::string> coefficient_names(const Solution& sol);

void write_text(const std::string& path, const std::string& text);

}  // namespace slisemap
