#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "slisemap/data.hpp"
#include "slisemap/io.hpp"
#include "slisemap/metrics.hpp"
#include "slisemap/parallel.hpp"
#include "slisemap/plot.hpp"
#include "slisemap/solver.hpp"

using nlohmann::json;
using namespace slisemap;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error("cannot read " + path + " for checksum");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

// "dir/run.json" -> "dir/run.manifest.json"
std::string manifest_path_for(const std::string& out) {
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + ".manifest.json")).string();
}

std::string sibling(const std::string& out, const std::string& suffix) {
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// Collects what a command did and writes the manifest next to its outputs.
class Run {
public:
    Run(std::string command, std::vector<std::string> argv)
        : command_(std::move(command)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

    json params = json::object();

    void input(const std::string& path) { inputs_.push_back(path); }
    void output(const std::string& path) { outputs_.push_back(path); }

    void finish(const std::string& manifest_path) const {
        json doc;
        doc["tool"] = "slisemap";
        doc["version"] = kVersion;
        doc["command"] = command_;
        doc["argv"] = argv_;
        doc["parameters"] = params;
        if (params.contains("seed")) doc["seed"] = params["seed"];
        auto files = [](const std::vector<std::string>& paths) {
            json arr = json::array();
            for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
            return arr;
        };
        doc["inputs"] = files(inputs_);
        doc["outputs"] = files(outputs_);
        doc["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_text(manifest_path, doc.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
};

std::vector<int> read_labels(const std::string& path) {
    const Table t = read_csv(path);
    Index col = 0;
    if (t.header.size() != 1) col = t.column("label");
    std::vector<int> labels(static_cast<std::size_t>(t.values.rows()));
    for (Index i = 0; i < t.values.rows(); ++i) {
        const double v = t.values(i, col);
        if (v != std::floor(v)) data_error(path + ": label at row " + std::to_string(i + 1) + " is not an integer");
        labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    return labels;
}

struct DataFlags {
    std::string path;
    std::vector<std::string> targets{"y"};
    std::string task = "regression";
    bool one_hot = false;
    std::string label_column;
    std::vector<std::string> exclude;

    void add_to(CLI::App* app, bool required_data = true) {
        auto* opt = app->add_option("--data", path, "input CSV (header row required)");
        if (required_data) opt->required();
        app->add_option("--target", targets, "response column(s); one per class for classification")
            ->capture_default_str();
        app->add_option("--task", task, "regression | classification | binary-logit")
            ->capture_default_str()
            ->check(CLI::IsMember({"regression", "classification", "binary-logit"}));
        app->add_flag("--one-hot", one_hot, "one-hot encode a single integer class column");
        app->add_option("--label-column", label_column, "ground-truth cluster id column, excluded from features");
        app->add_option("--exclude", exclude, "further non-feature columns");
    }

    CsvOptions options(std::optional<TaskKind> fixed_task = std::nullopt) const {
        CsvOptions o;
        o.targets = targets;
        o.exclude = exclude;
        o.one_hot = one_hot;
        if (!label_column.empty()) o.label_column = label_column;
        if (fixed_task) {
            o.task = *fixed_task;
        } else if (task == "classification") {
            o.task = TaskKind::classification(std::max<int>(2, static_cast<int>(targets.size())));
        } else {
            o.task = TaskKind::parse(task, 0);
        }
        return o;
    }

    json to_json() const {
        return {{"data", path}, {"targets", targets}, {"task", task}, {"one_hot", one_hot},
                {"label_column", label_column}, {"exclude", exclude}};
    }
};

struct SolverFlags {
    double lambda_z = 0.1;
    double lambda_lasso = 1e-4;
    int d = 2;
    std::uint64_t seed = 0;
    int max_outer = 100;
    int lbfgs_iters = 500;
    int history = 10;
    double rel_tol = 1e-6;
    bool no_escape = false;

    void add_to(CLI::App* app, bool with_lambda_z = true) {
        if (with_lambda_z) app->add_option("--lambda-z", lambda_z, "embedding regularisation (> 0)")->capture_default_str();
        app->add_option("--lambda-lasso", lambda_lasso, "lasso penalty on local models")->capture_default_str();
        app->add_option("--d", d, "embedding dimension")->capture_default_str();
        app->add_option("--seed", seed, "random seed")->capture_default_str();
        app->add_option("--max-outer", max_outer, "maximum escape/optimise rounds")->capture_default_str();
        app->add_option("--lbfgs-iters", lbfgs_iters, "L-BFGS iteration cap per round")->capture_default_str();
        app->add_option("--history", history, "L-BFGS history length")->capture_default_str();
        app->add_option("--rel-tol", rel_tol, "relative loss improvement tolerance")->capture_default_str();
        app->add_flag("--no-escape", no_escape, "disable the escape heuristic");
    }

    Hyperparams hyperparams() const {
        Hyperparams hp;
        hp.lambda_z = lambda_z;
        hp.lambda_lasso = lambda_lasso;
        hp.d = d;
        hp.validate();
        return hp;
    }

    SolverConfig config() const {
        SolverConfig c;
        c.max_outer_iters = max_outer;
        c.lbfgs_max_iters = lbfgs_iters;
        c.lbfgs_history = history;
        c.rel_tol = rel_tol;
        c.seed = seed;
        c.escape = !no_escape;
        c.validate();
        return c;
    }

    json to_json() const {
        return {{"lambda_z", lambda_z}, {"lambda_lasso", lambda_lasso}, {"d", d}, {"seed", seed},
                {"max_outer", max_outer}, {"lbfgs_iters", lbfgs_iters}, {"history", history},
                {"rel_tol", rel_tol}, {"escape", !no_escape}};
    }
};

void check_collapse(const Solution& sol) {
    const double max_norm = sol.Z.rowwise().norm().maxCoeff();
    if (max_norm < 0.1) {
        warn("embedding collapsed: max |Z_i| = " + format_double(max_norm) + " < 0.1; lambda_z is probably too large");
    }
}

// --- generate ---------------------------------------------------------------

struct GenerateCmd {
    RsynthSpec spec;
    std::string out;

    void setup(CLI::App* app) {
        app->add_option("--n", spec.n, "number of items")->capture_default_str();
        app->add_option("--m", spec.m, "number of features")->capture_default_str();
        app->add_option("--k", spec.k_clusters, "number of clusters")->capture_default_str();
        app->add_option("--s", spec.s, "std of the cluster centroids")->capture_default_str();
        app->add_option("--noise", spec.noise_std, "response noise std")->capture_default_str();
        app->add_option("--seed", spec.seed, "random seed")->capture_default_str();
        app->add_option("--out", out, "data CSV path")->required();
    }

    void run(Run& r) const {
        const RsynthData data = generate_rsynth(spec);
        const Dataset& ds = data.dataset;
        std::vector<std::string> header = ds.column_names;
        header.push_back("y");
        Matrix values(ds.X_raw.rows(), ds.X_raw.cols() + 1);
        values << ds.X_raw, ds.Y_raw;
        write_csv(out, header, values);
        r.output(out);

        const std::string labels_path = sibling(out, ".labels.csv");
        Matrix lab(ds.size(), 1);
        for (Index i = 0; i < ds.size(); ++i) lab(i, 0) = (*ds.labels)[static_cast<std::size_t>(i)];
        write_csv(labels_path, {"label"}, lab);
        r.output(labels_path);

        const std::string coefs_path = sibling(out, ".coefs.csv");
        std::vector<std::string> coef_header{"cluster"};
        coef_header.insert(coef_header.end(), ds.column_names.begin(), ds.column_names.end());
        Matrix coefs(data.true_coefs.rows(), data.true_coefs.cols() + 1);
        for (Index j = 0; j < coefs.rows(); ++j) coefs(j, 0) = static_cast<double>(j);
        coefs.rightCols(data.true_coefs.cols()) = data.true_coefs;
        write_csv(coefs_path, coef_header, coefs);
        r.output(coefs_path);

        r.params = {{"n", spec.n}, {"m", spec.m}, {"k", spec.k_clusters}, {"s", spec.s},
                    {"noise", spec.noise_std}, {"seed", spec.seed}, {"out", out}};
        r.finish(manifest_path_for(out));
        std::cout << "wrote " << spec.n << " x " << spec.m << " items to " << out << "\n";
    }
};

// --- fit --------------------------------------------------------------------

struct FitCmd {
    DataFlags data;
    SolverFlags solver;
    long subsample_n = 0;
    std::string out;

    void setup(CLI::App* app) {
        data.add_to(app);
        solver.add_to(app);
        app->add_option("--subsample", subsample_n, "fit on a uniform sample of this many items (0 = all)")
            ->capture_default_str();
        app->add_option("--out", out, "solution JSON path")->required();
    }

    void run(Run& r) const {
        const Hyperparams hp = solver.hyperparams();
        const SolverConfig cfg = solver.config();
        Dataset ds = load_csv(data.path, data.options());
        r.input(data.path);
        if (subsample_n > 0) ds = subsample(ds, subsample_n, solver.seed);

        const Solution sol = fit(ds, hp, cfg);
        check_collapse(sol);
        save_solution(sol, out);
        r.output(out);

        r.params = data.to_json();
        r.params.update(solver.to_json());
        r.params["subsample"] = subsample_n;
        r.params["out"] = out;
        r.finish(manifest_path_for(out));
        std::cout << "final loss: " << format_double(sol.final_loss) << "\n"
                  << "outer iterations: " << sol.outer_iters_used << "\n";
        if (sol.numeric_warning) warn("the optimiser reported numerical trouble; see the solution's numeric_warning");
    }
};

// --- add --------------------------------------------------------------------

Matrix coefficient_block(const Solution& sol, const Matrix& B, const Matrix& Z, std::vector<std::string>& header) {
    header = {"index"};
    for (Index c = 0; c < Z.cols(); ++c) header.push_back("z" + std::to_string(c + 1));
    const auto names = coefficient_names(sol);
    header.insert(header.end(), names.begin(), names.end());
    Matrix out(Z.rows(), 1 + Z.cols() + B.cols());
    for (Index i = 0; i < Z.rows(); ++i) out(i, 0) = static_cast<double>(i);
    out.middleCols(1, Z.cols()) = Z;
    out.rightCols(B.cols()) = B;
    return out;
}

struct AddCmd {
    std::string solution_path;
    DataFlags data;
    bool one_by_one = false;
    std::string out;
    std::uint64_t seed = 0;

    void setup(CLI::App* app) {
        app->add_option("--solution", solution_path, "fitted solution JSON")->required();
        data.add_to(app);
        app->add_flag("--one-by-one", one_by_one, "add every new item on its own");
        app->add_option("--seed", seed, "random seed")->capture_default_str();
        app->add_option("--out", out, "CSV of new embedding rows, local models and losses")->required();
    }

    void run(Run& r) const {
        const Solution sol = load_solution(solution_path);
        r.input(solution_path);
        const RawData raw = read_raw_csv(data.path, data.options(sol.task));
        r.input(data.path);
        if (raw.column_names != sol.column_names) {
            std::string got, want;
            for (const auto& c : raw.column_names) got += (got.empty() ? "" : ",") + c;
            for (const auto& c : sol.column_names) want += (want.empty() ? "" : ",") + c;
            data_error(data.path + ": feature columns [" + got + "] do not match the solution's [" + want + "]");
        }
        if (raw.X_raw.rows() == 0) {
            warn(data.path + ": no data rows; nothing to add");
            return;
        }
        const Matrix X_new = apply_normalization(raw.X_raw, sol.normalization);
        const Matrix Y_new = model_responses(raw.Y_raw, sol.task);

        SolverConfig cfg;
        cfg.seed = seed;
        const NewPoints added = add_new(sol, X_new, Y_new, cfg, one_by_one);

        std::vector<std::string> header;
        Matrix block = coefficient_block(sol, added.B, added.Z, header);
        header.push_back("loss");
        Matrix values(block.rows(), block.cols() + 1);
        values << block, added.losses;
        write_csv(out, header, values);
        r.output(out);

        r.params = data.to_json();
        r.params["solution"] = solution_path;
        r.params["one_by_one"] = one_by_one;
        r.params["seed"] = seed;
        r.params["out"] = out;
        r.finish(manifest_path_for(out));
        std::cout << "added " << values.rows() << " items; mean loss " << format_double(added.losses.mean()) << "\n";
    }
};

// --- metrics ----------------------------------------------------------------

struct MetricsCmd {
    std::string solution_path;
    std::vector<int> ks{5, 25};
    std::string labels_path;
    double quantile = 0.3;
    std::string out;

    void setup(CLI::App* app) {
        app->add_option("--solution", solution_path, "fitted solution JSON")->required();
        app->add_option("--k", ks, "neighbourhood sizes (repeatable)")->capture_default_str();
        app->add_option("--labels", labels_path, "CSV of ground-truth cluster labels, one per item");
        app->add_option("--quantile", quantile, "global-model loss quantile used as coverage threshold")
            ->capture_default_str();
        app->add_option("--out", out, "report JSON path; the CSV goes next to it")->required();
    }

    void run(Run& r) const {
        const Solution sol = load_solution(solution_path);
        r.input(solution_path);
        std::optional<std::vector<int>> labels;
        if (!labels_path.empty()) {
            labels = read_labels(labels_path);
            r.input(labels_path);
            if (static_cast<Index>(labels->size()) != sol.n()) {
                data_error(labels_path + ": " + std::to_string(labels->size()) + " labels for " +
                           std::to_string(sol.n()) + " items");
            }
        }
        const MetricReport report = compute_report(sol, ks, labels, quantile);
        write_text(out, report_to_json(report).dump(2) + "\n");
        r.output(out);
        const std::string csv = sibling(out, ".csv");
        write_text(csv, report_to_csv(report));
        r.output(csv);

        r.params = {{"solution", solution_path}, {"k", ks}, {"labels", labels_path}, {"quantile", quantile},
                    {"out", out}};
        r.finish(manifest_path_for(out));
        std::cout << report_to_csv(report);
    }
};

// --- sweep ------------------------------------------------------------------

struct SweepCmd {
    DataFlags data;
    SolverFlags solver;
    std::vector<double> lambdas{0.001, 0.01, 0.1, 1.0};
    std::vector<int> ks{1, 2, 5, 10, 20, 50, 100};
    double quantile = 0.3;
    std::string out;

    void setup(CLI::App* app) {
        data.add_to(app);
        solver.add_to(app, false);
        app->add_option("--lambda-z", lambdas, "grid of embedding regularisation values")->capture_default_str();
        app->add_option("--k", ks, "grid of neighbourhood sizes")->capture_default_str();
        app->add_option("--quantile", quantile, "coverage threshold quantile")->capture_default_str();
        app->add_option("--out", out, "long-format CSV path")->required();
    }

    void run(Run& r) const {
        const Dataset ds = load_csv(data.path, data.options());
        r.input(data.path);
        std::vector<int> grid_k;
        for (int k : ks) {
            if (k >= 1 && k < ds.size()) {
                grid_k.push_back(k);
            } else {
                warn("sweep: skipping k = " + std::to_string(k) + " (needs 1 <= k < n = " + std::to_string(ds.size()) + ")");
            }
        }
        std::vector<Hyperparams> hps;
        for (double lz : lambdas) {
            SolverFlags f = solver;
            f.lambda_z = lz;
            hps.push_back(f.hyperparams());
        }
        const SolverConfig base = solver.config();

        const Vector global = fit_global_model(ds.X, ds.Y, ds.task, solver.lambda_lasso);
        const Vector gl = model_losses(ds.X, ds.Y, global, ds.task);
        const double l0 = loss_threshold(std::vector<double>(gl.data(), gl.data() + gl.size()), quantile);

        std::vector<Solution> fits(hps.size());
        parallel_for(
            0, hps.size(),
            [&](std::size_t g) {
                SolverConfig cfg = base;
                cfg.seed = base.seed + g;
                fits[g] = fit(ds, hps[g], cfg);
            },
            1);

        std::ostringstream csv;
        csv << "lambda_z,seed,k,metric,value\n";
        for (std::size_t g = 0; g < fits.size(); ++g) {
            const Solution& sol = fits[g];
            const std::string prefix = format_double(hps[g].lambda_z) + "," + std::to_string(base.seed + g) + ",";
            csv << prefix << ",final_loss," << format_double(sol.final_loss) << "\n";
            csv << prefix << "0,fidelity," << format_double(fidelity(sol, Neighbourhood::point())) << "\n";
            csv << prefix << "0,coverage," << format_double(coverage(sol, l0, Neighbourhood::point())) << "\n";
            for (int k : grid_k) {
                csv << prefix << k << ",fidelity," << format_double(fidelity(sol, Neighbourhood::knn(k))) << "\n";
                csv << prefix << k << ",coverage," << format_double(coverage(sol, l0, Neighbourhood::knn(k))) << "\n";
                if (ds.labels) {
                    csv << prefix << k << ",purity," << format_double(cluster_purity(sol.Z, *ds.labels, k)) << "\n";
                }
            }
        }
        write_text(out, csv.str());
        r.output(out);

        r.params = data.to_json();
        r.params.update(solver.to_json());
        r.params["lambda_z"] = lambdas;
        r.params["k"] = ks;
        r.params["quantile"] = quantile;
        r.params["threshold_l0"] = l0;
        r.params["out"] = out;
        r.finish(manifest_path_for(out));
        std::cout << "wrote " << fits.size() << " fits to " << out << "\n";
    }
};

// --- plot -------------------------------------------------------------------

struct PlotCmd {
    std::string solution_path;
    std::string color_by = "loss";
    std::string labels_path;
    std::string out;
    std::string models_out;
    int clusters = 5;
    std::uint64_t seed = 0;

    void setup(CLI::App* app) {
        app->add_option("--solution", solution_path, "fitted solution JSON")->required();
        app->add_option("--color-by", color_by, "loss | label | coefficient:NAME")->capture_default_str();
        app->add_option("--labels", labels_path, "CSV of labels (for --color-by label)");
        app->add_option("--out", out, "embedding SVG path")->required();
        app->add_option("--models-out", models_out, "optional SVG of k-means clusters of the local models");
        app->add_option("--clusters", clusters, "number of k-means clusters")->capture_default_str();
        app->add_option("--seed", seed, "k-means seed")->capture_default_str();
    }

    void run(Run& r) const {
        const Solution sol = load_solution(solution_path);
        r.input(solution_path);
        const ColorBy color = ColorBy::parse(color_by);
        std::optional<std::vector<int>> labels;
        if (!labels_path.empty()) {
            labels = read_labels(labels_path);
            r.input(labels_path);
        }
        write_text(out, embedding_svg(sol, color, labels));
        r.output(out);
        if (!models_out.empty()) {
            if (clusters < 1 || clusters > sol.n()) {
                usage_error("--clusters must lie in [1, n = " + std::to_string(sol.n()) + "]");
            }
            const KMeansResult km = kmeans(sol.B, clusters, seed);
            write_text(models_out, model_clusters_svg(sol, km));
            r.output(models_out);
        }
        r.params = {{"solution", solution_path}, {"color_by", color_by}, {"labels", labels_path}, {"out", out},
                    {"models_out", models_out}, {"clusters", clusters}, {"seed", seed}};
        r.finish(manifest_path_for(out));
    }
};

// --- export -----------------------------------------------------------------

struct ExportCmd {
    std::string solution_path;
    std::string what = "both";
    std::string out;

    void setup(CLI::App* app) {
        app->add_option("--solution", solution_path, "fitted solution JSON")->required();
        app->add_option("--what", what, "Z | B | both")->capture_default_str()->check(CLI::IsMember({"Z", "B", "both"}));
        app->add_option("--out", out, "CSV path")->required();
    }

    void run(Run& r) const {
        const Solution sol = load_solution(solution_path);
        r.input(solution_path);
        std::vector<std::string> header;
        Matrix block = coefficient_block(sol, sol.B, sol.Z, header);
        const Index d = sol.Z.cols();
        std::vector<Index> keep{0};
        for (Index c = 1; c < block.cols(); ++c) {
            const bool is_z = c <= d;
            if (what == "both" || (what == "Z" && is_z) || (what == "B" && !is_z)) keep.push_back(c);
        }
        std::vector<std::string> h;
        Matrix values(block.rows(), static_cast<Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c) {
            h.push_back(header[static_cast<std::size_t>(keep[c])]);
            values.col(static_cast<Index>(c)) = block.col(keep[c]);
        }
        write_csv(out, h, values);
        r.output(out);
        r.params = {{"solution", solution_path}, {"what", what}, {"out", out}};
        r.finish(manifest_path_for(out));
    }
};

int run_cli(std::vector<std::string> args);

// --- rerun ------------------------------------------------------------------

struct RerunCmd {
    std::string manifest;

    void setup(CLI::App* app) {
        app->add_option("manifest", manifest, "manifest JSON written by an earlier run")->required();
    }

    int run() const {
        std::ifstream in(manifest);
        if (!in) data_error("cannot open " + manifest);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            data_error(manifest + ": invalid JSON: " + e.what());
        }
        std::vector<std::string> argv;
        json recorded;
        try {
            argv = doc.at("argv").get<std::vector<std::string>>();
            recorded = doc.at("outputs");
        } catch (const json::exception& e) {
            data_error(manifest + ": not a run manifest: " + e.what());
        }
        if (argv.empty() || argv[0] == "rerun") data_error(manifest + ": manifest does not record a rerunnable command");

        const int status = run_cli(argv);
        if (status != 0) return status;
        int mismatches = 0;
        for (const auto& o : recorded) {
            const std::string path = o.at("path").get<std::string>();
            const std::string want = o.at("sha256").get<std::string>();
            const std::string got = sha256_file(path);
            if (got != want) {
                std::cerr << "mismatch: " << path << " sha256 " << got << " (recorded " << want << ")\n";
                ++mismatches;
            }
        }
        if (mismatches > 0) numeric_error(std::to_string(mismatches) + " output(s) differ from the manifest");
        std::cout << "reproduced " << recorded.size() << " output(s) bit-identically\n";
        return 0;
    }
};

int run_cli(std::vector<std::string> args) {
    CLI::App app{"Local explanations with a jointly learned embedding", "slisemap"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenerateCmd gen;
    FitCmd fitc;
    AddCmd add;
    MetricsCmd met;
    SweepCmd sweep;
    PlotCmd plot;
    ExportCmd exp;
    RerunCmd rerun;
    gen.setup(app.add_subcommand("generate", "write a synthetic clustered regression dataset"));
    fitc.setup(app.add_subcommand("fit", "fit an embedding and local models to a CSV"));
    add.setup(app.add_subcommand("add", "add new items to a fitted solution"));
    met.setup(app.add_subcommand("metrics", "fidelity, coverage and purity of a solution"));
    sweep.setup(app.add_subcommand("sweep", "fidelity and coverage against k over a lambda_z grid"));
    plot.setup(app.add_subcommand("plot", "SVG scatter of the embedding"));
    exp.setup(app.add_subcommand("export", "flat CSV of embedding and local models"));
    rerun.setup(app.add_subcommand("rerun", "re-execute a manifest and compare output checksums"));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error[usage]: " << e.what() << "\n";
        return exit_code(ErrorKind::Usage);
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "rerun") return rerun.run();
    Run r(name, args);
    if (name == "generate") gen.run(r);
    else if (name == "fit") fitc.run(r);
    else if (name == "add") add.run(r);
    else if (name == "metrics") met.run(r);
    else if (name == "sweep") sweep.run(r);
    else if (name == "plot") plot.run(r);
    else if (name == "export") exp.run(r);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run_cli(std::move(args));
    } catch (const Error& e) {
        std::cerr << "error[" << error_kind_name(e.kind()) << "]: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
}
