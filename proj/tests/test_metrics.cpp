#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "slisemap/data.hpp"
#include "slisemap/metrics.hpp"
#include "slisemap/objective.hpp"
#include "support.hpp"

using namespace slisemap;
using testing_support::Instance;
using testing_support::Rng;

namespace {

Matrix with_intercept(const Matrix& X) {
    Matrix out(X.rows(), X.cols() + 1);
    out << X, Matrix::Ones(X.rows(), 1);
    return out;
}

// Brute-force kNN: sort all others by (distance, index).
std::vector<Index> brute_knn(const Matrix& Z, Index i, int k) {
    std::vector<Index> others;
    for (Index j = 0; j < Z.rows(); ++j)
        if (j != i) others.push_back(j);
    std::stable_sort(others.begin(), others.end(), [&](Index a, Index b) {
        return (Z.row(i) - Z.row(a)).norm() < (Z.row(i) - Z.row(b)).norm();
    });
    others.resize(static_cast<std::size_t>(k));
    return others;
}

}  // namespace

TEST_CASE("loss_threshold") {
    CHECK(loss_threshold({1, 2, 3, 4, 5}, 0.3) == doctest::Approx(2.2).epsilon(1e-15));
    CHECK(loss_threshold({5, 3, 1, 4, 2}, 0.3) == doctest::Approx(2.2).epsilon(1e-15));
    CHECK(loss_threshold({7, 7, 7, 7}, 0.3) == 7.0);
    CHECK(loss_threshold({4, 9, 2}, 0.0) == 2.0);
    CHECK(loss_threshold({4, 9, 2}, 1.0) == 9.0);
    CHECK(loss_threshold({4}, 0.5) == 4.0);
    CHECK_THROWS_AS(loss_threshold({}, 0.3), Error);
    CHECK_THROWS_AS(loss_threshold({1, 2}, 1.5), Error);
}

TEST_CASE("knn_indices") {
    Rng rng(51);
    for (int t = 0; t < 10; ++t) {
        const Matrix Z = rng.matrix(15, 2);
        const auto nn = knn_indices(Z, 4);
        for (Index i = 0; i < 15; ++i) CHECK(nn[static_cast<std::size_t>(i)] == brute_knn(Z, i, 4));
    }
    Matrix tied = Matrix::Zero(4, 2);
    const auto nn = knn_indices(tied, 2);
    CHECK(nn[0] == std::vector<Index>{1, 2});
    CHECK(nn[3] == std::vector<Index>{0, 1});
    CHECK_THROWS_AS(knn_indices(tied, 4), Error);
    CHECK_THROWS_AS(knn_indices(tied, 0), Error);
}

TEST_CASE("cluster_purity") {
    Rng rng(52);
    SUBCASE("single label") {
        CHECK(cluster_purity(rng.matrix(20, 2), std::vector<int>(20, 3), 5) == 1.0);
    }
    SUBCASE("separated blobs") {
        Matrix Z = rng.matrix(40, 2, 0.1);
        std::vector<int> labels(40);
        for (Index i = 0; i < 40; ++i) {
            labels[static_cast<std::size_t>(i)] = i < 20 ? 0 : 1;
            if (i >= 20) Z(i, 0) += 10.0;
        }
        CHECK(cluster_purity(Z, labels, 10) == 1.0);
        CHECK(cluster_purity(Z, labels, 19) == 1.0);
    }
    SUBCASE("random labels give about one over the cluster count") {
        double total = 0.0;
        for (int t = 0; t < 50; ++t) {
            std::vector<int> labels(90);
            for (int i = 0; i < 90; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
            std::shuffle(labels.begin(), labels.end(), rng.engine);
            total += cluster_purity(rng.matrix(90, 2), labels, 10);
        }
        // excluding self, the expected same-label share is 29/89
        CHECK(std::abs(total / 50 - 1.0 / 3.0) < 0.05);
    }
    SUBCASE("invariant under rigid motions") {
        for (int t = 0; t < 10; ++t) {
            const Matrix Z = rng.matrix(30, 2);
            const Matrix moved = (Z * rng.orthogonal(2)).rowwise() + rng.matrix(1, 2, 5.0).row(0);
            const auto a = knn_indices(Z, 5), b = knn_indices(moved, 5);
            for (std::size_t i = 0; i < a.size(); ++i)
                CHECK(std::set<Index>(a[i].begin(), a[i].end()) == std::set<Index>(b[i].begin(), b[i].end()));
            std::vector<int> labels(30);
            for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = rng.integer(0, 2);
            CHECK(cluster_purity(Z, labels, 5) == cluster_purity(moved, labels, 5));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(cluster_purity(rng.matrix(5, 2), std::vector<int>(5, 0), 5), Error);
        CHECK_THROWS_AS(cluster_purity(rng.matrix(5, 2), std::vector<int>(4, 0), 2), Error);
    }
}

TEST_CASE("fidelity") {
    Rng rng(53);
    SUBCASE("matches a direct loop") {
        for (const auto& task : testing_support::all_tasks()) {
            const Instance inst = testing_support::random_instance(rng, task, 5, 3, 2);
            double point = 0.0, knn = 0.0;
            for (Index i = 0; i < 5; ++i) {
                point += static_cast<double>(testing_support::oracle_pointwise_loss(inst.X, inst.Y, inst.B, i, i, task));
                double row = 0.0;
                for (Index j : brute_knn(inst.Z, i, 2))
                    row += static_cast<double>(testing_support::oracle_pointwise_loss(inst.X, inst.Y, inst.B, i, j, task));
                knn += row / 2;
            }
            CHECK(std::abs(fidelity(inst.X, inst.Y, inst.B, inst.Z, task, Neighbourhood::point()) - point / 5) < 1e-12);
            CHECK(std::abs(fidelity(inst.X, inst.Y, inst.B, inst.Z, task, Neighbourhood::knn(2)) - knn / 5) < 1e-12);
        }
    }
    SUBCASE("k = n - 1 is the off-diagonal mean of the loss matrix") {
        const Instance inst = testing_support::random_instance(rng, TaskKind::regression(), 9, 4, 2);
        const Matrix L = local_loss_matrix(inst.B, inst.X, inst.Y, inst.task);
        const double off = (L.sum() - L.trace()) / (9.0 * 8.0);
        CHECK(fidelity(inst.X, inst.Y, inst.B, inst.Z, inst.task, Neighbourhood::knn(8)) ==
              doctest::Approx(off).epsilon(1e-12));
    }
    SUBCASE("exact local models have zero pointwise fidelity") {
        RsynthSpec spec;
        spec.n = 60;
        spec.m = 4;
        spec.noise_std = 0.0;
        const RsynthData gen = generate_rsynth(spec);
        const Dataset& ds = gen.dataset;
        // Express the generating coefficients on the standardised scale.
        Matrix B(ds.size(), ds.X.cols());
        for (Index i = 0; i < ds.size(); ++i) {
            const Vector beta = gen.true_coefs.row((*ds.labels)[static_cast<std::size_t>(i)]).transpose();
            for (Index c = 0; c < beta.size(); ++c) B(i, c) = beta[c] * ds.normalization.stddev[c];
            double intercept = 0.0;
            for (Index c = 0; c < beta.size(); ++c) intercept += beta[c] * ds.normalization.mean[c];
            B(i, beta.size()) = intercept;
        }
        CHECK(fidelity(ds.X, ds.Y, B, rng.matrix(ds.size(), 2), ds.task, Neighbourhood::point()) < 1e-20);
    }
    SUBCASE("invariant to relabelling the items") {
        const Instance inst = testing_support::random_instance(rng, TaskKind::classification(3), 12, 3, 2);
        std::vector<Index> perm(12);
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng.engine);
        Matrix X(12, 3), Y(12, 3), B(12, inst.B.cols()), Z(12, 2);
        for (Index i = 0; i < 12; ++i) {
            X.row(i) = inst.X.row(perm[i]);
            Y.row(i) = inst.Y.row(perm[i]);
            B.row(i) = inst.B.row(perm[i]);
            Z.row(i) = inst.Z.row(perm[i]);
        }
        for (int k : {1, 3, 11}) {
            CHECK(fidelity(X, Y, B, Z, inst.task, Neighbourhood::knn(k)) ==
                  doctest::Approx(fidelity(inst.X, inst.Y, inst.B, inst.Z, inst.task, Neighbourhood::knn(k))).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(fidelity(Matrix::Ones(3, 1), Matrix::Ones(3, 1), Matrix::Ones(3, 1), Matrix::Zero(3, 2),
                             TaskKind::regression(), Neighbourhood::knn(3)),
                    Error);
}

TEST_CASE("coverage") {
    Rng rng(54);
    const Instance inst = testing_support::random_instance(rng, TaskKind::regression(), 20, 3, 2);
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& hood : {Neighbourhood::point(), Neighbourhood::full(), Neighbourhood::knn(5)}) {
        CHECK(coverage(inst.X, inst.Y, inst.B, inst.Z, inst.task, inf, hood) == 1.0);
        CHECK(coverage(inst.X, inst.Y, inst.B, inst.Z, inst.task, 0.0, hood) == 0.0);
        double prev = 0.0;
        for (double l0 : {0.01, 0.1, 0.5, 1.0, 2.0, 10.0}) {
            const double c = coverage(inst.X, inst.Y, inst.B, inst.Z, inst.task, l0, hood);
            CHECK(c >= prev);
            CHECK(c <= 1.0);
            prev = c;
        }
    }
    CHECK_THROWS_AS(coverage(inst.X, inst.Y, inst.B, inst.Z, inst.task, std::nan(""), Neighbourhood::full()), Error);
    CHECK_THROWS_AS(coverage(inst.X, inst.Y, inst.B, inst.Z, inst.task, 1.0, Neighbourhood::knn(20)), Error);
}

TEST_CASE("global model") {
    Rng rng(55);
    SUBCASE("noise-free linear data") {
        const Matrix X = with_intercept(rng.matrix(50, 4));
        const Vector beta = rng.matrix(5, 1).col(0);
        const Vector b = fit_global_model(X, X * beta, TaskKind::regression());
        CHECK((b - beta).cwiseAbs().maxCoeff() < 1e-4);
    }
    SUBCASE("constant response") {
        const Matrix X = with_intercept(rng.matrix(40, 3));
        const Vector b = fit_global_model(X, Matrix::Constant(40, 1, 2.5), TaskKind::regression());
        CHECK(b[3] == doctest::Approx(2.5).epsilon(1e-4));
        CHECK(b.head(3).cwiseAbs().maxCoeff() < 1e-4);
    }
    SUBCASE("normal equations without penalty") {
        for (int t = 0; t < 5; ++t) {
            const Matrix X = with_intercept(rng.matrix(30, 3));
            const Matrix Y = rng.matrix(30, 1);
            const Vector ls = (X.transpose() * X).ldlt().solve(X.transpose() * Y.col(0));
            const Vector b = fit_global_model(X, Y, TaskKind::regression(), 0.0);
            CHECK((b - ls).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
    SUBCASE("classification") {
        const Instance inst = testing_support::random_instance(rng, TaskKind::classification(3), 40, 3, 2);
        const Vector b = fit_global_model(inst.X, inst.Y, inst.task);
        CHECK(b.size() == 6);
        const Vector at_zero = model_losses(inst.X, inst.Y, Vector::Zero(6), inst.task);
        CHECK(model_losses(inst.X, inst.Y, b, inst.task).mean() <= at_zero.mean());
    }
    SUBCASE("global coverage at its own quantile is the quantile") {
        for (int n : {37, 100, 250}) {
            RsynthSpec spec;
            spec.n = n;
            spec.m = 5;
            spec.seed = static_cast<std::uint64_t>(n);
            const Dataset ds = generate_rsynth(spec).dataset;
            const Vector b = fit_global_model(ds.X, ds.Y, ds.task);
            const Vector gl = model_losses(ds.X, ds.Y, b, ds.task);
            const double l0 = loss_threshold(std::vector<double>(gl.data(), gl.data() + gl.size()), 0.3);
            const Matrix B = b.transpose().replicate(n, 1);
            const double c = coverage(ds.X, ds.Y, B, Matrix::Zero(n, 2), ds.task, l0, Neighbourhood::full());
            CHECK(std::abs(c - 0.3) <= 1.0 / n);
        }
    }
}

TEST_CASE("compute_report") {
    RsynthSpec spec;
    spec.n = 40;
    spec.m = 3;
    const Dataset ds = generate_rsynth(spec).dataset;
    Rng rng(56);
    Solution sol;
    sol.X = ds.X;
    sol.Y = ds.Y;
    sol.B = rng.matrix(40, 4);
    sol.Z = rng.matrix(40, 2);
    sol.task = ds.task;
    const MetricReport r = compute_report(sol, {5, 10}, ds.labels, 0.3);
    CHECK(r.fidelity_knn.size() == 2);
    CHECK(r.coverage_knn.count(10) == 1);
    REQUIRE(r.purity_knn.has_value());
    CHECK(r.purity_knn->at(5) == cluster_purity(sol.Z, *ds.labels, 5));
    CHECK(r.fidelity_point == fidelity(sol, Neighbourhood::point()));
    CHECK(std::abs(r.global_coverage_full - 0.3) <= 1.0 / 40);
    CHECK(r.coverage_full >= 0.0);
    CHECK(r.coverage_full <= 1.0);
    CHECK(!compute_report(sol, {5}).purity_knn.has_value());
}
