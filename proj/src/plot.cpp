#include "slisemap/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "slisemap/io.hpp"
#include "slisemap/model.hpp"

namespace slisemap {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

// Viridis anchors, linearly interpolated.
constexpr std::array<std::array<double, 3>, 5> kViridis = {{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                             {94, 201, 98}, {253, 231, 37}}};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string continuous_color(double t) {
    if (!std::isfinite(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0) * (kViridis.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kViridis.size() - 2);
    const double f = t - static_cast<double>(i);
    char buf[8];
    int rgb[3];
    for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(kViridis[i][c] + f * (kViridis[i + 1][c] - kViridis[i][c])));
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, y0, w, h;
    double zx_min, zx_max, zy_min, zy_max;

    double px(double zx) const { return x0 + (zx - zx_min) / (zx_max - zx_min) * w; }
    double py(double zy) const { return y0 + h - (zy - zy_min) / (zy_max - zy_min) * h; }
};

Frame make_frame(const Matrix& Z, double x0, double y0, double w, double h) {
    Frame f{x0, y0, w, h, 0, 0, 0, 0};
    const double x_lo = Z.rows() ? Z.col(0).minCoeff() : 0.0;
    const double x_hi = Z.rows() ? Z.col(0).maxCoeff() : 0.0;
    const double y_lo = Z.cols() > 1 && Z.rows() ? Z.col(1).minCoeff() : 0.0;
    const double y_hi = Z.cols() > 1 && Z.rows() ? Z.col(1).maxCoeff() : 0.0;
    const double pad_x = std::max(1e-9, 0.05 * (x_hi - x_lo));
    const double pad_y = std::max(1e-9, 0.05 * (y_hi - y_lo));
    f.zx_min = x_lo - pad_x;
    f.zx_max = x_hi + pad_x;
    f.zy_min = y_lo - pad_y;
    f.zy_max = y_hi + pad_y;
    return f;
}

void scatter(std::ostringstream& out, const Solution& sol, const Frame& f, const std::vector<std::string>& colors) {
    out << "<rect x=\"" << fmt(f.x0) << "\" y=\"" << fmt(f.y0) << "\" width=\"" << fmt(f.w) << "\" height=\"" << fmt(f.h)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (Index i = 0; i < sol.n(); ++i) {
        const double zy = sol.Z.cols() > 1 ? sol.Z(i, 1) : 0.0;
        out << "<circle cx=\"" << fmt(f.px(sol.Z(i, 0))) << "\" cy=\"" << fmt(f.py(zy)) << "\" r=\"3\" fill=\""
            << colors[static_cast<std::size_t>(i)] << "\" fill-opacity=\"0.8\"/>\n";
    }
    out << "<text x=\"" << fmt(f.x0 + f.w / 2) << "\" y=\"" << fmt(f.y0 + f.h + 30)
        << "\" text-anchor=\"middle\" font-size=\"12\">Z1</text>\n";
    out << "<text x=\"" << fmt(f.x0 - 30) << "\" y=\"" << fmt(f.y0 + f.h / 2)
        << "\" text-anchor=\"middle\" font-size=\"12\">Z2</text>\n";
}

void categorical_legend(std::ostringstream& out, double x, double y, const std::vector<int>& categories,
                        const std::string& title) {
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"12\">" << escape_xml(title) << "</text>\n";
    for (std::size_t r = 0; r < categories.size(); ++r) {
        const double yy = y + 10 + 18 * static_cast<double>(r);
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(yy) << "\" width=\"12\" height=\"12\" fill=\""
            << kPalette[static_cast<std::size_t>(categories[r]) % kPalette.size()] << "\"/>\n";
        out << "<text x=\"" << fmt(x + 18) << "\" y=\"" << fmt(yy + 10) << "\" font-size=\"11\">" << categories[r]
            << "</text>\n";
    }
}

std::string header(double w, double h) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
        << "\" viewBox=\"0 0 " << fmt(w) << ' ' << fmt(h) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

}  // namespace

ColorBy ColorBy::parse(const std::string& spec) {
    if (spec == "loss") return {Kind::Loss, {}};
    if (spec == "label") return {Kind::Label, {}};
    const std::string prefix = "coefficient:";
    if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) return {Kind::Coefficient, spec.substr(prefix.size())};
    usage_error("--color-by must be loss, label or coefficient:NAME, got '" + spec + "'");
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
    const Index n = points.rows();
    if (k < 1) usage_error("k-means: k must be >= 1");
    if (n < 1) data_error("k-means: no points");
    k = static_cast<int>(std::min<Index>(k, n));

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    KMeansResult r;
    r.centroids.resize(k, points.cols());
    for (int c = 0; c < k; ++c) r.centroids.row(c) = points.row(order[c]);
    r.assignment.assign(static_cast<std::size_t>(n), -1);

    for (r.iterations = 0; r.iterations < max_iters; ++r.iterations) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = (points.row(i) - r.centroids.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (r.assignment[i] != best) {
                r.assignment[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.row(r.assignment[i]) += points.row(i);
            ++counts[r.assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) r.centroids.row(c) = sums.row(c) / counts[c];
        }
    }
    return r;
}

std::string embedding_svg(const Solution& sol, const ColorBy& color, const std::optional<std::vector<int>>& labels) {
    const Index n = sol.n();
    const double W = 720, H = 520;
    const Frame frame = make_frame(sol.Z, 60, 30, 480, 440);
    std::vector<std::string> colors(static_cast<std::size_t>(n));
    std::ostringstream legend;

    auto continuous = [&](const Vector& values, const std::string& title) {
        const double lo = n ? values.minCoeff() : 0.0;
        const double hi = n ? values.maxCoeff() : 0.0;
        const double span = hi > lo ? hi - lo : 1.0;
        for (Index i = 0; i < n; ++i) colors[i] = continuous_color((values[i] - lo) / span);
        const double x = 580, y = 40;
        legend << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"12\">" << escape_xml(title) << "</text>\n";
        for (int s = 0; s < 20; ++s) {
            legend << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y + 10 + 10 * s) << "\" width=\"16\" height=\"10\" fill=\""
                   << continuous_color(1.0 - s / 19.0) << "\"/>\n";
        }
        legend << "<text x=\"" << fmt(x + 22) << "\" y=\"" << fmt(y + 20) << "\" font-size=\"11\">max " << fmt_value(hi)
               << "</text>\n";
        legend << "<text x=\"" << fmt(x + 22) << "\" y=\"" << fmt(y + 208) << "\" font-size=\"11\">min " << fmt_value(lo)
               << "</text>\n";
    };

    switch (color.kind) {
        case ColorBy::Kind::Loss: {
            Vector loss(n);
            for (Index i = 0; i < n; ++i) {
                loss[i] = pointwise_loss(sol.X.row(i).transpose(), sol.B.row(i).transpose(), sol.Y.row(i).transpose(),
                                         sol.task);
            }
            continuous(loss, "local loss");
            break;
        }
        case ColorBy::Kind::Coefficient: {
            const auto names = coefficient_names(sol);
            auto it = std::find(names.begin(), names.end(), color.coefficient);
            if (it == names.end()) {
                std::string valid;
                for (const auto& nm : names) valid += (valid.empty() ? "" : ", ") + nm;
                usage_error("unknown coefficient '" + color.coefficient + "'; valid names: " + valid);
            }
            continuous(sol.B.col(it - names.begin()), color.coefficient);
            break;
        }
        case ColorBy::Kind::Label: {
            if (!labels) usage_error("--color-by label needs labels");
            if (static_cast<Index>(labels->size()) != n) {
                data_error("labels: " + std::to_string(labels->size()) + " values for " + std::to_string(n) + " items");
            }
            const std::set<int> distinct(labels->begin(), labels->end());
            for (Index i = 0; i < n; ++i) {
                colors[i] = kPalette[static_cast<std::size_t>(std::abs((*labels)[i])) % kPalette.size()];
            }
            categorical_legend(legend, 580, 40, std::vector<int>(distinct.begin(), distinct.end()), "label");
            break;
        }
    }

    std::ostringstream out;
    out << header(W, H);
    scatter(out, sol, frame, colors);
    out << legend.str() << "</svg>\n";
    return out.str();
}

std::string model_clusters_svg(const Solution& sol, const KMeansResult& clusters) {
    const int k = static_cast<int>(clusters.centroids.rows());
    const auto names = coefficient_names(sol);
    const double panel_w = 260;
    const double bar_h = 14;
    const double panel_h = 40 + bar_h * static_cast<double>(names.size());
    const double W = 560 + panel_w * std::min(k, 3);
    const double H = std::max(520.0, 20 + panel_h * std::ceil(k / 3.0));

    std::vector<std::string> colors(static_cast<std::size_t>(sol.n()));
    for (Index i = 0; i < sol.n(); ++i) colors[i] = kPalette[static_cast<std::size_t>(clusters.assignment[i]) % kPalette.size()];

    std::ostringstream out;
    out << header(W, H);
    scatter(out, sol, make_frame(sol.Z, 60, 30, 400, 400), colors);
    std::vector<int> ids(static_cast<std::size_t>(k));
    std::iota(ids.begin(), ids.end(), 0);
    categorical_legend(out, 470, 40, ids, "model cluster");

    const double scale = std::max(1e-12, clusters.centroids.cwiseAbs().maxCoeff());
    for (int c = 0; c < k; ++c) {
        const double x0 = 560 + panel_w * (c % 3);
        const double y0 = 20 + panel_h * (c / 3);
        const double axis = x0 + 150;
        const double half = 90;
        out << "<text x=\"" << fmt(x0) << "\" y=\"" << fmt(y0 + 12) << "\" font-size=\"12\" fill=\""
            << kPalette[static_cast<std::size_t>(c) % kPalette.size()] << "\">cluster " << c << "</text>\n";
        out << "<line x1=\"" << fmt(axis) << "\" y1=\"" << fmt(y0 + 20) << "\" x2=\"" << fmt(axis) << "\" y2=\""
            << fmt(y0 + 20 + bar_h * names.size()) << "\" stroke=\"#444\"/>\n";
        for (std::size_t f = 0; f < names.size(); ++f) {
            const double v = clusters.centroids(c, static_cast<Index>(f));
            const double len = half * v / scale;
            const double yy = y0 + 20 + bar_h * static_cast<double>(f);
            out << "<text x=\"" << fmt(x0 + 55) << "\" y=\"" << fmt(yy + 10) << "\" font-size=\"10\" text-anchor=\"end\">"
                << escape_xml(names[f]) << "</text>\n";
            out << "<rect x=\"" << fmt(len < 0 ? axis + len : axis) << "\" y=\"" << fmt(yy + 2) << "\" width=\""
                << fmt(std::abs(len)) << "\" height=\"" << fmt(bar_h - 4) << "\" fill=\""
                << (v < 0 ? "#d62728" : "#1f77b4") << "\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace slisemap
