#include "slisemap/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace slisemap {

namespace {

// Minimiser of the cubic interpolating (t1, f1, g1) and (t2, f2, g2), clamped
// to [lo, hi]. Falls back to the midpoint when the cubic has no minimiser or
// any input is non-finite.
double cubic_minimizer(double t1, double f1, double g1, double t2, double f2, double g2, double lo, double hi) {
    if (!std::isfinite(f1) || !std::isfinite(f2) || !std::isfinite(g1) || !std::isfinite(g2) || t1 == t2) {
        return 0.5 * (lo + hi);
    }
    const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (t1 - t2);
    const double d2_sq = d1 * d1 - g1 * g2;
    if (d2_sq < 0.0) return 0.5 * (lo + hi);
    const double d2 = std::sqrt(d2_sq);
    double t;
    if (t1 <= t2) {
        t = t2 - (t2 - t1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
    } else {
        t = t1 - (t1 - t2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    }
    if (!std::isfinite(t)) return 0.5 * (lo + hi);
    return std::clamp(t, lo, hi);
}

struct Trial {
    double t = 0.0;
    double f = 0.0;
    double gtd = 0.0;
    Vector g;
};

struct LineSearchResult {
    Trial best;
    int evaluations = 0;
    bool wolfe = false;
};

// Strong Wolfe line search along d from x (Nocedal & Wright, algorithms 3.5/3.6).
LineSearchResult strong_wolfe(const ObjectiveFn& fn, const Vector& x, const Vector& d, double f0, const Vector& g0,
                              double gtd0, double t_init, const LbfgsOptions& opt) {
    LineSearchResult out;
    Vector xt(x.size());
    auto evaluate = [&](double t) {
        Trial tr;
        tr.t = t;
        tr.g.resize(x.size());
        xt = x + t * d;
        tr.f = fn(xt, tr.g);
        ++out.evaluations;
        if (!std::isfinite(tr.f) || !tr.g.allFinite()) {
            tr.f = std::numeric_limits<double>::infinity();
            tr.gtd = std::numeric_limits<double>::quiet_NaN();
        } else {
            tr.gtd = tr.g.dot(d);
        }
        return tr;
    };
    auto armijo_fails = [&](const Trial& tr) { return !(tr.f <= f0 + opt.c1 * tr.t * gtd0); };
    auto curvature_ok = [&](const Trial& tr) { return std::abs(tr.gtd) <= -opt.c2 * gtd0; };

    const double d_norm = d.cwiseAbs().maxCoeff();
    Trial prev{0.0, f0, gtd0, g0};
    Trial cur = evaluate(t_init);
    Trial lo_end, hi_end;
    bool bracketed = false;
    int iter = 0;

    // Bracketing phase.
    while (iter < opt.max_line_search) {
        if (armijo_fails(cur) || (iter > 0 && cur.f >= prev.f)) {
            lo_end = prev;
            hi_end = cur;
            bracketed = true;
            break;
        }
        if (curvature_ok(cur)) {
            out.best = cur;
            out.wolfe = true;
            return out;
        }
        if (cur.gtd >= 0.0) {
            lo_end = cur;
            hi_end = prev;
            bracketed = true;
            break;
        }
        const double min_step = cur.t + 0.01 * (cur.t - prev.t);
        const double max_step = cur.t * 10.0;
        const double next = cubic_minimizer(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, min_step, max_step);
        prev = cur;
        cur = evaluate(next);
        ++iter;
    }
    if (!bracketed) {
        // Ran out of evaluations while still extrapolating: take the better end.
        out.best = (cur.f < prev.f && !armijo_fails(cur)) ? cur : prev;
        return out;
    }

    // Zoom phase. Invariant: lo_end has the lowest Armijo-satisfying value seen
    // in the bracket; the minimiser lies between lo_end and hi_end.
    bool insufficient_progress = false;
    while (iter < opt.max_line_search) {
        const double a = std::min(lo_end.t, hi_end.t);
        const double b = std::max(lo_end.t, hi_end.t);
        if ((b - a) * d_norm < 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;

        double t = cubic_minimizer(lo_end.t, lo_end.f, lo_end.gtd, hi_end.t, hi_end.f, hi_end.gtd, a, b);
        const double eps = 0.1 * (b - a);
        if (std::min(b - t, t - a) < eps) {
            if (insufficient_progress || t >= b || t <= a) {
                t = (std::abs(t - b) < std::abs(t - a)) ? b - eps : a + eps;
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }

        Trial tr = evaluate(t);
        ++iter;
        if (armijo_fails(tr) || tr.f >= lo_end.f) {
            hi_end = std::move(tr);
        } else {
            if (curvature_ok(tr)) {
                out.best = std::move(tr);
                out.wolfe = true;
                return out;
            }
            if (tr.gtd * (hi_end.t - lo_end.t) >= 0.0) hi_end = lo_end;
            lo_end = std::move(tr);
        }
    }
    out.best = lo_end;
    return out;
}

// Two-loop recursion: returns -H g for the current limited-memory inverse Hessian.
Vector lbfgs_direction(const Vector& g, const std::deque<Vector>& s_hist, const std::deque<Vector>& y_hist,
                       const std::deque<double>& rho, const std::vector<Index>& blocks) {
    Vector q = -g;
    const std::size_t k = s_hist.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
        alpha[i] = rho[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
    }
    if (k > 0) {
        const Vector& s = s_hist.back();
        const Vector& y = y_hist.back();
        const double gamma = s.dot(y) / y.squaredNorm();
        if (blocks.empty()) {
            q *= gamma;
        } else {
            Index start = 0;
            for (Index len : blocks) {
                const double sy = s.segment(start, len).dot(y.segment(start, len));
                const double yy = y.segment(start, len).squaredNorm();
                q.segment(start, len) *= sy > 0.0 && yy > 0.0 ? sy / yy : gamma;
                start += len;
            }
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        const double beta = rho[i] * y_hist[i].dot(q);
        q += (alpha[i] - beta) * s_hist[i];
    }
    return q;
}

}  // namespace

void LbfgsOptions::validate() const {
    if (history < 1) usage_error("L-BFGS history must be >= 1");
    if (max_iters < 1) usage_error("L-BFGS iteration cap must be >= 1");
    if (!(rel_tol > 0.0)) usage_error("relative tolerance must be > 0");
    if (!(grad_tol >= 0.0)) usage_error("gradient tolerance must be >= 0");
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) usage_error("line search constants must satisfy 0 < c1 < c2 < 1");
    if (max_line_search < 1) usage_error("line search evaluation cap must be >= 1");
}

std::string to_string(LbfgsStatus status) {
    switch (status) {
        case LbfgsStatus::Stationary: return "stationary";
        case LbfgsStatus::Converged: return "converged";
        case LbfgsStatus::MaxIterations: return "max-iterations";
        case LbfgsStatus::LineSearchFailed: return "line-search-failed";
        case LbfgsStatus::NonFinite: return "non-finite";
    }
    return "unknown";
}

LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0, const LbfgsOptions& opt) {
    opt.validate();
    if (!opt.blocks.empty()) {
        Index total = 0;
        for (Index len : opt.blocks) {
            if (len < 0) usage_error("L-BFGS scaling blocks must have nonnegative sizes");
            total += len;
        }
        if (total != x0.size()) usage_error("L-BFGS scaling blocks do not cover the parameter vector");
    }
    LbfgsResult res;
    res.x = x0;
    res.grad.resize(x0.size());
    res.f = fn(res.x, res.grad);
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.grad.allFinite()) {
        res.status = LbfgsStatus::NonFinite;
        return res;
    }
    if (x0.size() == 0 || res.grad.cwiseAbs().maxCoeff() <= opt.grad_tol) {
        res.status = LbfgsStatus::Stationary;
        return res;
    }

    std::deque<Vector> s_hist, y_hist;
    std::deque<double> rho;
    res.status = LbfgsStatus::MaxIterations;

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        Vector d = lbfgs_direction(res.grad, s_hist, y_hist, rho, opt.blocks);
        double gtd = res.grad.dot(d);
        if (!(gtd < 0.0) || !std::isfinite(gtd)) {
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            d = -res.grad;
            gtd = -res.grad.squaredNorm();
        }
        const double t_init = s_hist.empty() ? std::min(1.0, 1.0 / res.grad.cwiseAbs().sum()) : 1.0;

        LineSearchResult ls = strong_wolfe(fn, res.x, d, res.f, res.grad, gtd, t_init, opt);
        res.evaluations += ls.evaluations;
        if (ls.best.t == 0.0 || !(ls.best.f < res.f)) {
            res.status = LbfgsStatus::LineSearchFailed;
            break;
        }

        Vector s = ls.best.t * d;
        Vector y = ls.best.g - res.grad;
        const double ys = y.dot(s);
        if (ys > 1e-10) {
            if (static_cast<int>(s_hist.size()) == opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(std::move(y));
            rho.push_back(1.0 / ys);
        }

        const double f_prev = res.f;
        res.x += s;
        res.f = ls.best.f;
        res.grad = std::move(ls.best.g);
        ++res.iterations;

        if (res.grad.cwiseAbs().maxCoeff() <= opt.grad_tol) {
            res.status = LbfgsStatus::Stationary;
            break;
        }
        if (f_prev - res.f < opt.rel_tol * std::abs(f_prev)) {
            res.status = LbfgsStatus::Converged;
            break;
        }
    }
    return res;
}

}  // namespace slisemap
