#pragma once

#include <string>

#include "slisemap/common.hpp"

/// White-box local models and their pointwise losses.
///
/// Regression uses a linear model with squared error. Classification uses
/// multinomial logistic regression (last class is the reference class with an
/// implicit zero logit) scored by the squared Hellinger distance. BinaryLogit
/// is regression on logit-transformed probabilities.
namespace slisemap {

enum class TaskType { Regression, Classification, BinaryLogit };

struct TaskKind {
    TaskType type = TaskType::Regression;
    int classes = 1;  // p; only meaningful for Classification

    static TaskKind regression() { return {TaskType::Regression, 1}; }
    static TaskKind classification(int p);
    static TaskKind binary_logit() { return {TaskType::BinaryLogit, 1}; }

    bool is_classification() const { return type == TaskType::Classification; }

    // Columns of the response matrix used by the loss.
    int response_dim() const { return is_classification() ? classes : 1; }

    // Length of one local coefficient vector for m covariates (intercept included).
    int coef_count(int m) const { return is_classification() ? (classes - 1) * m : m; }

    std::string name() const;
    static TaskKind parse(const std::string& name, int classes = 2);

    friend bool operator==(const TaskKind&, const TaskKind&) = default;
};

// Clamp applied before the logit so black-box outputs of exactly 0 or 1 stay finite.
inline constexpr double kLogitEpsilon = 1e-6;

double linear_predict(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b);

double quadratic_loss(double predicted, double target);

Vector multinomial_predict(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b, int classes);

double hellinger_sq(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

double logit_transform(double probability);

double logistic(double t);

// Loss of the local model b on the single item (x, y) under the given task.
// y has response_dim() entries.
double pointwise_loss(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b,
                      const Eigen::Ref<const Vector>& y, const TaskKind& task);

}  // namespace slisemap
