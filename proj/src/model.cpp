#include "slisemap/model.hpp"

#include <algorithm>
#include <cmath>

namespace slisemap {

namespace {

void require_same_length(Index a, Index b, const char* what) {
    if (a != b) {
        data_error(std::string(what) + ": dimension mismatch (x has length " + std::to_string(a) +
                   ", b has length " + std::to_string(b) + ")");
    }
}

void require_simplex(const Eigen::Ref<const Vector>& v, const char* which) {
    double sum = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0)) data_error(std::string("hellinger_sq: ") + which + " has a negative or non-finite component");
        sum += v[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        data_error(std::string("hellinger_sq: ") + which + " does not sum to 1 (sum = " + std::to_string(sum) + ")");
    }
}

}  // namespace

TaskKind TaskKind::classification(int p) {
    if (p < 2) usage_error("classification requires at least 2 classes, got " + std::to_string(p));
    return {TaskType::Classification, p};
}

std::string TaskKind::name() const {
    switch (type) {
        case TaskType::Regression: return "regression";
        case TaskType::Classification: return "classification";
        case TaskType::BinaryLogit: return "binary-logit";
    }
    return "unknown";
}

TaskKind TaskKind::parse(const std::string& name, int classes) {
    if (name == "regression") return regression();
    if (name == "classification") return classification(classes);
    if (name == "binary-logit") return binary_logit();
    usage_error("unknown task '" + name + "' (expected regression, classification or binary-logit)");
}

double linear_predict(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b) {
    require_same_length(x.size(), b.size(), "linear_predict");
    return x.dot(b);
}

double quadratic_loss(double predicted, double target) {
    if (!std::isfinite(predicted) || !std::isfinite(target)) data_error("quadratic_loss: non-finite input");
    const double r = predicted - target;
    return r * r;
}

Vector multinomial_predict(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b, int classes) {
    if (classes < 2) usage_error("multinomial_predict: need at least 2 classes");
    const Index m = x.size();
    if (b.size() != (classes - 1) * m) {
        data_error("multinomial_predict: dimension mismatch (b has length " + std::to_string(b.size()) +
                   ", expected (p-1)*m = " + std::to_string((classes - 1) * m) + ")");
    }
    Vector logits(classes);
    for (int c = 0; c + 1 < classes; ++c) logits[c] = x.dot(b.segment(c * m, m));
    logits[classes - 1] = 0.0;
    const double top = logits.maxCoeff();
    Vector out = (logits.array() - top).exp().matrix();
    out /= out.sum();
    return out;
}

double hellinger_sq(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size()) {
        data_error("hellinger_sq: dimension mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    require_simplex(a, "first argument");
    require_simplex(b, "second argument");
    double affinity = 0.0;
    for (Index i = 0; i < a.size(); ++i) affinity += std::sqrt(a[i] * b[i]);
    return std::clamp(1.0 - affinity, 0.0, 1.0);
}

double logit_transform(double probability) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        data_error("logit_transform: probability " + std::to_string(probability) + " outside [0, 1]");
    }
    const double p = std::clamp(probability, kLogitEpsilon, 1.0 - kLogitEpsilon);
    return std::log(p / (1.0 - p));
}

double logistic(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double pointwise_loss(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& b,
                      const Eigen::Ref<const Vector>& y, const TaskKind& task) {
    if (task.is_classification()) {
        return hellinger_sq(multinomial_predict(x, b, task.classes), y);
    }
    return quadratic_loss(linear_predict(x, b), y[0]);
}

}  // namespace slisemap
