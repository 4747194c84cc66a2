#include "slisemap/solver.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SVD>

#include "slisemap/parallel.hpp"

namespace slisemap {

void SolverConfig::validate() const {
    if (max_outer_iters < 1) usage_error("max_outer_iters must be >= 1");
    if (lbfgs_history < 1) usage_error("lbfgs_history must be >= 1");
    if (lbfgs_max_iters < 1) usage_error("lbfgs_max_iters must be >= 1");
    if (!(rel_tol > 0.0)) usage_error("rel_tol must be > 0");
}

LbfgsOptions SolverConfig::lbfgs_options() const {
    LbfgsOptions opt;
    opt.history = lbfgs_history;
    opt.max_iters = lbfgs_max_iters;
    opt.rel_tol = rel_tol;
    return opt;
}

InitialState init(const Matrix& X, const Matrix& Y, const Hyperparams& hp, const TaskKind& task, std::uint64_t seed) {
    hp.validate();
    const Index n = X.rows();
    if (n < 1) data_error("init: need at least one data item");
    if (Y.rows() != n) data_error("init: X and Y have different row counts");
    const int d = hp.d;

    InitialState s;
    s.Z = Matrix::Zero(n, d);
    const Matrix centred = X.rowwise() - X.colwise().mean();
    Eigen::BDCSVD<Matrix> svd(centred, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol = static_cast<double>(std::max(n, X.cols())) * std::numeric_limits<double>::epsilon() *
                       (sv.size() > 0 ? sv[0] : 0.0);
    int usable = 0;
    for (Index c = 0; c < sv.size() && usable < d; ++c) {
        if (!(sv[c] > tol)) break;
        // Fix the sign so the largest-magnitude loading is positive.
        Index arg = 0;
        svd.matrixV().col(c).cwiseAbs().maxCoeff(&arg);
        const double flip = svd.matrixV()(arg, c) < 0 ? -1.0 : 1.0;
        s.Z.col(c) = flip * sv[c] * svd.matrixU().col(c);
        ++usable;
    }
    if (usable < d) {
        warn("init: embedding dimension " + std::to_string(d) + " exceeds the rank of X (" + std::to_string(usable) +
             "); trailing embedding columns start at zero");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int q = task.coef_count(static_cast<int>(X.cols()));
    s.B.resize(n, q);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < q; ++k) s.B(i, k) = normal(rng);
    return s;
}

std::vector<Index> escape_targets(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z,
                                  const TaskKind& task) {
    if (B.rows() != Z.rows()) data_error("escape: B and Z have different row counts");
    const Matrix W = softmax_weights(pairwise_distances(Z));
    const Matrix L = local_loss_matrix(B, X, Y, task);  // models x items
    const Matrix M = W * L;                              // neighbourhoods x items
    std::vector<Index> target(static_cast<std::size_t>(X.rows()));
    for (Index i = 0; i < X.rows(); ++i) {
        Index best = 0;
        double best_value = M(0, i);
        for (Index k = 1; k < M.rows(); ++k) {
            if (M(k, i) < best_value) {
                best_value = M(k, i);
                best = k;
            }
        }
        target[i] = best;
    }
    return target;
}

std::pair<Matrix, Matrix> escape(const Matrix& X, const Matrix& Y, const Matrix& B, const Matrix& Z,
                                 const TaskKind& task) {
    const auto target = escape_targets(X, Y, B, Z, task);
    Matrix B2(X.rows(), B.cols());
    Matrix Z2(X.rows(), Z.cols());
    for (Index i = 0; i < X.rows(); ++i) {
        B2.row(i) = B.row(target[i]);
        Z2.row(i) = Z.row(target[i]);
    }
    return {std::move(B2), std::move(Z2)};
}

JointResult minimize_joint(const Matrix& X, const Matrix& Y, const Matrix& B0, const Matrix& Z0,
                           const Hyperparams& hp, const TaskKind& task, const LbfgsOptions& options) {
    const Index n = B0.rows();
    const Index q = B0.cols();
    const Index d = Z0.cols();
    const Index nb = n * q;

    Vector x0(nb + n * d);
    x0.head(nb) = Eigen::Map<const Vector>(B0.data(), nb);
    x0.tail(n * d) = Eigen::Map<const Vector>(Z0.data(), n * d);

    Matrix dB, dZ;
    ObjectiveFn fn = [&](const Vector& x, Vector& grad) {
        const Eigen::Map<const Matrix> B(x.data(), n, q);
        const Eigen::Map<const Matrix> Z(x.data() + nb, n, d);
        const double f = loss_and_gradients(X, Y, B, Z, hp, task, dB, dZ);
        grad.head(nb) = Eigen::Map<const Vector>(dB.data(), nb);
        grad.tail(n * d) = Eigen::Map<const Vector>(dZ.data(), n * d);
        return f;
    };
    LbfgsOptions scaled = options;
    scaled.blocks = {nb, n * d};
    const LbfgsResult r = lbfgs_minimize(fn, x0, scaled);

    JointResult out;
    out.B = Eigen::Map<const Matrix>(r.x.data(), n, q);
    out.Z = Eigen::Map<const Matrix>(r.x.data() + nb, n, d);
    out.loss = r.f;
    out.status = r.status;
    return out;
}

Solution fit(const Matrix& X, const Matrix& Y, const Hyperparams& hp, const TaskKind& task,
             const SolverConfig& config) {
    hp.validate();
    config.validate();
    if (X.rows() < 1) data_error("fit: empty dataset");
    if (X.rows() < 2) warn("fit: fewer than two data items; the embedding is not meaningful");

    InitialState start = init(X, Y, hp, task, config.seed);
    check_shapes(X, Y, start.B, start.Z, task);
    const double initial = total_loss(X, Y, start.B, start.Z, hp, task);  // throws if non-finite
    (void)initial;

    const LbfgsOptions options = config.lbfgs_options();
    JointResult best = minimize_joint(X, Y, start.B, start.Z, hp, task, options);

    Solution sol;
    sol.loss_history.push_back(best.loss);
    int outer = 0;
    while (outer < config.max_outer_iters) {
        Matrix B = best.B;
        Matrix Z = best.Z;
        if (config.escape) std::tie(B, Z) = escape(X, Y, best.B, best.Z, task);
        JointResult next = minimize_joint(X, Y, B, Z, hp, task, options);
        ++outer;
        if (!std::isfinite(next.loss)) {
            warn("fit: optimisation produced a non-finite loss; keeping the best state found");
            sol.numeric_warning = true;
            break;
        }
        if (next.loss < best.loss - config.rel_tol * std::abs(best.loss)) {
            best = std::move(next);
            sol.loss_history.push_back(best.loss);
        } else {
            break;
        }
    }

    sol.X = X;
    sol.Y = Y;
    sol.B = std::move(best.B);
    sol.Z = std::move(best.Z);
    sol.hp = hp;
    sol.task = task;
    sol.seed = config.seed;
    sol.outer_iters_used = outer;
    sol.final_loss = total_loss(sol.X, sol.Y, sol.B, sol.Z, hp, task);
    return sol;
}

Solution fit(const Dataset& ds, const Hyperparams& hp, const SolverConfig& config) {
    Solution sol = fit(ds.X, ds.Y, hp, ds.task, config);
    sol.column_names = ds.column_names;
    sol.normalization = ds.normalization;
    return sol;
}

namespace {

// The full loss of the solution augmented with new rows, as a function of the
// new rows only. Terms that involve only old rows are constants; old rows see
// the new items through their softmax denominators.
class AugmentedObjective {
public:
    AugmentedObjective(const Solution& sol, const Vector& old_mass, const Vector& old_weighted_loss,
                       double old_constant, const Matrix& X_new, const Matrix& Y_new)
        : sol_(sol), mass_(old_mass), weighted_(old_weighted_loss), constant_(old_constant) {
        const Index n = sol.n();
        const Index k = X_new.rows();
        X_all_.resize(n + k, sol.X.cols());
        X_all_ << sol.X, X_new;
        Y_all_.resize(n + k, sol.Y.cols());
        Y_all_ << sol.Y, Y_new;
        old_on_new_ = local_loss_matrix(sol.B, X_new, Y_new, sol.task);  // n x k
    }

    Index new_count() const { return old_on_new_.cols(); }

    // Value of the augmented total loss; fills gradients for the new rows.
    // When `contributions` is given it receives each new row's share.
    double operator()(const Matrix& Bn, const Matrix& Zn, Matrix& dB, Matrix& dZ, Vector* contributions = nullptr) const {
        const Index n = sol_.n();
        const Index k = Bn.rows();
        const Index N = n + k;
        const Index m = X_all_.cols();
        const Index d = Zn.cols();
        const Hyperparams& hp = sol_.hp;

        Matrix Z_all(N, d);
        Z_all << sol_.Z, Zn;

        // Distances from new rows to every row (k x N).
        Matrix Dn(k, N);
        for (Index j = 0; j < N; ++j)
            for (Index t = 0; t < k; ++t) Dn(t, j) = (Zn.row(t) - Z_all.row(j)).norm();

        // Old rows: T_i = (A_i + sum_t E_it Lon_it) / (S_i + sum_t E_it), with E = exp(-D).
        const Matrix E = (-Dn.leftCols(n).transpose()).array().exp().matrix();  // n x k
        const Vector denom = mass_ + E.rowwise().sum();
        const Vector T = (weighted_ + E.cwiseProduct(old_on_new_).rowwise().sum()).cwiseQuotient(denom);
        Matrix G_old(n, k);  // W_it (L_it - T_i)
        for (Index t = 0; t < k; ++t)
            for (Index i = 0; i < n; ++i) G_old(i, t) = E(i, t) / denom[i] * (old_on_new_(i, t) - T[i]);

        // New rows: ordinary softmax rows over all N items.
        const Matrix Wn = softmax_weights(Dn);
        Matrix Ln;
        std::vector<Matrix> slopes;
        local_losses_and_slopes(Bn, X_all_, Y_all_, sol_.task, Ln, slopes);
        const Vector wl = Wn.cwiseProduct(Ln).rowwise().sum();
        Matrix G_new(k, N);
        for (Index j = 0; j < N; ++j)
            for (Index t = 0; t < k; ++t) G_new(t, j) = Wn(t, j) * (Ln(t, j) - wl[t]);

        dZ = (2.0 * hp.lambda_z) * Zn;
        for (Index t = 0; t < k; ++t) {
            for (Index j = 0; j < N; ++j) {
                if (j == n + t) continue;
                double g = G_new(t, j);
                g += j < n ? G_old(j, t) : G_new(j - n, n + t);
                const double dist = std::sqrt(Dn(t, j) * Dn(t, j) + kDistanceGradEpsilon);
                dZ.row(t) -= (g / dist) * (Zn.row(t) - Z_all.row(j));
            }
        }

        dB.resize(k, Bn.cols());
        for (std::size_t c = 0; c < slopes.size(); ++c) {
            dB.middleCols(static_cast<Index>(c) * m, m).noalias() = Wn.cwiseProduct(slopes[c]) * X_all_;
        }
        if (hp.lambda_lasso > 0.0) {
            dB += hp.lambda_lasso * Bn.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
        }

        const Vector reg = hp.lambda_z * Zn.rowwise().squaredNorm() + hp.lambda_lasso * Bn.cwiseAbs().rowwise().sum();
        if (contributions) *contributions = wl + reg;
        return constant_ + T.sum() + wl.sum() + reg.sum();
    }

private:
    const Solution& sol_;
    const Vector& mass_;
    const Vector& weighted_;
    double constant_;
    Matrix X_all_;
    Matrix Y_all_;
    Matrix old_on_new_;
};

struct OldRowTerms {
    Vector mass;      // S_i = sum_j exp(-D_ij)
    Vector weighted;  // A_i = sum_j exp(-D_ij) L_ij
    double constant = 0.0;
};

OldRowTerms old_row_terms(const Solution& sol) {
    const Matrix E = (-pairwise_distances(sol.Z)).array().exp().matrix();
    const Matrix L = local_loss_matrix(sol.B, sol.X, sol.Y, sol.task);
    OldRowTerms t;
    t.mass = E.rowwise().sum();
    t.weighted = E.cwiseProduct(L).rowwise().sum();
    t.constant = sol.hp.lambda_z * sol.Z.squaredNorm() + sol.hp.lambda_lasso * sol.B.cwiseAbs().sum();
    return t;
}

void check_new_items(const Solution& sol, const Matrix& X_new, const Matrix& Y_new) {
    if (X_new.cols() != sol.X.cols()) {
        data_error("add_new: new items have " + std::to_string(X_new.cols()) + " columns, the solution has " +
                   std::to_string(sol.X.cols()));
    }
    if (Y_new.rows() != X_new.rows() || Y_new.cols() != sol.Y.cols()) {
        data_error("add_new: responses are " + std::to_string(Y_new.rows()) + "x" + std::to_string(Y_new.cols()) +
                   ", expected " + std::to_string(X_new.rows()) + "x" + std::to_string(sol.Y.cols()));
    }
}

NewPoints add_batch(const Solution& sol, const OldRowTerms& old, const Matrix& X_new, const Matrix& Y_new,
                    const LbfgsOptions& options) {
    const Index k = X_new.rows();
    const Index q = sol.B.cols();
    const Index d = sol.Z.cols();
    const AugmentedObjective objective(sol, old.mass, old.weighted, old.constant, X_new, Y_new);

    auto [B0, Z0] = escape(X_new, Y_new, sol.B, sol.Z, sol.task);
    Vector x0(k * (q + d));
    x0.head(k * q) = Eigen::Map<const Vector>(B0.data(), k * q);
    x0.tail(k * d) = Eigen::Map<const Vector>(Z0.data(), k * d);

    Matrix dB, dZ;
    ObjectiveFn fn = [&](const Vector& x, Vector& grad) {
        const Matrix Bn = Eigen::Map<const Matrix>(x.data(), k, q);
        const Matrix Zn = Eigen::Map<const Matrix>(x.data() + k * q, k, d);
        const double f = objective(Bn, Zn, dB, dZ);
        grad.head(k * q) = Eigen::Map<const Vector>(dB.data(), k * q);
        grad.tail(k * d) = Eigen::Map<const Vector>(dZ.data(), k * d);
        return f;
    };
    LbfgsOptions scaled = options;
    scaled.blocks = {k * q, k * d};
    const LbfgsResult r = lbfgs_minimize(fn, x0, scaled);

    NewPoints out;
    out.B = Eigen::Map<const Matrix>(r.x.data(), k, q);
    out.Z = Eigen::Map<const Matrix>(r.x.data() + k * q, k, d);
    objective(out.B, out.Z, dB, dZ, &out.losses);
    return out;
}

}  // namespace

double augmented_loss(const Solution& sol, const Matrix& X_new, const Matrix& Y_new, const Matrix& B_new,
                      const Matrix& Z_new, Matrix& dB, Matrix& dZ) {
    check_new_items(sol, X_new, Y_new);
    if (B_new.rows() != X_new.rows() || B_new.cols() != sol.B.cols() || Z_new.rows() != X_new.rows() ||
        Z_new.cols() != sol.Z.cols()) {
        data_error("augmented_loss: new rows do not match the new items and the solution");
    }
    const OldRowTerms old = old_row_terms(sol);
    const AugmentedObjective objective(sol, old.mass, old.weighted, old.constant, X_new, Y_new);
    return objective(B_new, Z_new, dB, dZ);
}

NewPoints add_new(const Solution& sol, const Matrix& X_new, const Matrix& Y_new, const SolverConfig& config,
                  bool one_by_one) {
    config.validate();
    check_new_items(sol, X_new, Y_new);
    const Index k = X_new.rows();
    NewPoints out;
    out.B.resize(k, sol.B.cols());
    out.Z.resize(k, sol.Z.cols());
    out.losses.resize(k);
    if (k == 0) return out;

    const OldRowTerms old = old_row_terms(sol);
    const LbfgsOptions options = config.lbfgs_options();
    if (!one_by_one) return add_batch(sol, old, X_new, Y_new, options);
    parallel_for(0, static_cast<std::size_t>(k), [&](std::size_t tt) {
        const Index t = static_cast<Index>(tt);
        NewPoints one = add_batch(sol, old, X_new.row(t), Y_new.row(t), options);
        out.B.row(t) = one.B.row(0);
        out.Z.row(t) = one.Z.row(0);
        out.losses[t] = one.losses[0];
    }, 1);
    return out;
}

}  // namespace slisemap
