#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slisemap/common.hpp"

namespace slisemap {

struct LbfgsOptions {
    int history = 10;
    int max_iters = 500;
    double rel_tol = 1e-6;    // stop when (f_prev - f) < rel_tol * |f_prev|
    double grad_tol = 1e-9;   // stop when max |g_i| < grad_tol
    double c1 = 1e-4;         // sufficient decrease
    double c2 = 0.9;          // curvature (strong Wolfe)
    int max_line_search = 25;
    // Sizes of consecutive blocks of x, each with its own scaling of the
    // initial inverse Hessian (gamma = s'y / y'y on that block). Empty means
    // a single block.
    std::vector<Index> blocks;

    void validate() const;
};

enum class LbfgsStatus { Stationary, Converged, MaxIterations, LineSearchFailed, NonFinite };

std::string to_string(LbfgsStatus status);

struct LbfgsResult {
    Vector x;
    Vector grad;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
};

// Returns f(x) and writes the gradient into `grad` (already sized like x).
// A non-finite return value is treated as an infeasible trial point.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

// Limited-memory BFGS with a strong Wolfe line search (bracketing + zoom with
// safeguarded cubic interpolation). Never throws mid-run: if the line search
// cannot make progress the best point found so far is returned, and a
// non-finite starting point is reported through LbfgsStatus::NonFinite.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0, const LbfgsOptions& options = {});

}  // namespace slisemap
