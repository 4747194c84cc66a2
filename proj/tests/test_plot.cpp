#include <doctest.h>

#include <regex>
#include <set>
#include <string>

#include "slisemap/plot.hpp"
#include "support.hpp"

using namespace slisemap;
using testing_support::Rng;

namespace {

int count(const std::string& text, const std::string& needle) {
    int c = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++c;
    return c;
}

Solution small_solution(Rng& rng, Index n) {
    const auto inst = testing_support::random_instance(rng, TaskKind::regression(), n, 2, 2);
    Solution sol;
    sol.X = inst.X;
    sol.Y = inst.Y;
    sol.B = inst.B;
    sol.Z = inst.Z;
    sol.task = inst.task;
    sol.column_names = {"a", "b"};
    return sol;
}

}  // namespace

TEST_CASE("ColorBy parsing") {
    CHECK(ColorBy::parse("loss").kind == ColorBy::Kind::Loss);
    CHECK(ColorBy::parse("label").kind == ColorBy::Kind::Label);
    const ColorBy c = ColorBy::parse("coefficient:b");
    CHECK(c.kind == ColorBy::Kind::Coefficient);
    CHECK(c.coefficient == "b");
    CHECK_THROWS_AS(ColorBy::parse("size"), Error);
}

TEST_CASE("embedding plot") {
    Rng rng(81);
    const Solution sol = small_solution(rng, 17);
    const std::string svg = embedding_svg(sol, ColorBy::parse("loss"));
    CHECK(svg.find("<svg xmlns") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count(svg, "<circle") == 17);
    CHECK(svg == embedding_svg(sol, ColorBy::parse("loss")));

    SUBCASE("legend shows the loss range") {
        double lo = 1e300, hi = -1e300;
        for (Index i = 0; i < sol.n(); ++i) {
            const double l = pointwise_loss(sol.X.row(i).transpose(), sol.B.row(i).transpose(), sol.Y.row(i).transpose(), sol.task);
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
        char buf[64];
        std::snprintf(buf, sizeof(buf), "max %.4g<", hi);
        CHECK(svg.find(buf) != std::string::npos);
        std::snprintf(buf, sizeof(buf), "min %.4g<", lo);
        CHECK(svg.find(buf) != std::string::npos);
    }
    SUBCASE("coefficient colouring") {
        const std::string by_b = embedding_svg(sol, ColorBy::parse("coefficient:intercept"));
        CHECK(count(by_b, "<circle") == 17);
        try {
            embedding_svg(sol, ColorBy::parse("coefficient:zzz"));
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Usage);
            CHECK(std::string(e.what()).find("a, b, intercept") != std::string::npos);
        }
    }
    SUBCASE("label colouring") {
        std::vector<int> labels(17);
        for (int i = 0; i < 17; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
        const std::string by_label = embedding_svg(sol, ColorBy::parse("label"), labels);
        const std::regex fill("<circle[^>]*fill=\"(#[0-9a-f]{6})\"");
        std::set<std::string> fills;
        for (std::sregex_iterator it(by_label.begin(), by_label.end(), fill), end; it != end; ++it) fills.insert((*it)[1]);
        CHECK(fills.size() == 3);
        CHECK_THROWS_AS(embedding_svg(sol, ColorBy::parse("label")), Error);
        CHECK_THROWS_AS(embedding_svg(sol, ColorBy::parse("label"), std::vector<int>(3, 0)), Error);
    }
}

TEST_CASE("k-means") {
    Rng rng(82);
    Matrix P(60, 2);
    for (Index i = 0; i < 60; ++i) {
        P(i, 0) = rng.normal() * 0.1 + 10.0 * static_cast<double>(i % 3);
        P(i, 1) = rng.normal() * 0.1;
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const KMeansResult r = kmeans(P, 3, seed);
        // A Lloyd fixed point: nearest-centroid assignment, centroids are cluster means.
        for (Index i = 0; i < 60; ++i) {
            const int a = r.assignment[static_cast<std::size_t>(i)];
            for (int c = 0; c < 3; ++c)
                CHECK((P.row(i) - r.centroids.row(a)).squaredNorm() <= (P.row(i) - r.centroids.row(c)).squaredNorm());
        }
        for (int c = 0; c < 3; ++c) {
            Vector sum = Vector::Zero(2);
            int cnt = 0;
            for (Index i = 0; i < 60; ++i)
                if (r.assignment[static_cast<std::size_t>(i)] == c) {
                    sum += P.row(i).transpose();
                    ++cnt;
                }
            if (cnt > 0) CHECK((sum / cnt - r.centroids.row(c).transpose()).norm() < 1e-9);
        }
    }
    // Seeding one point per blob recovers the blobs.
    const KMeansResult r = kmeans(P.topRows(3), 3, 0);
    CHECK(std::set<int>(r.assignment.begin(), r.assignment.end()).size() == 3);
    CHECK(kmeans(P, 3, 5).assignment == kmeans(P, 3, 5).assignment);
    CHECK(kmeans(P.topRows(2), 5, 1).centroids.rows() == 2);
    CHECK_THROWS_AS(kmeans(P, 0, 1), Error);

    const Solution sol = small_solution(rng, 12);
    const KMeansResult c = kmeans(sol.B, 2, 1);
    const std::string svg = model_clusters_svg(sol, c);
    CHECK(count(svg, "<circle") == 12);
    CHECK(svg.find("cluster 1") != std::string::npos);
    CHECK(svg == model_clusters_svg(sol, kmeans(sol.B, 2, 1)));
}
