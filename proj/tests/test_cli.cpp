#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "slisemap/data.hpp"
#include "support.hpp"

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string& dir, const std::string& args) {
    const std::string out = dir + "/.stdout", err = dir + "/.stderr";
    const std::string cmd = std::string("cd '") + dir + "' && '" + SLISEMAP_CLI_PATH + "' " + args + " >'" + out +
                            "' 2>'" + err + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

int lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

const std::string kFast = " --max-outer 3 --lbfgs-iters 60";

}  // namespace

TEST_CASE("cli generate is deterministic") {
    const std::string dir = testing_support::scratch_dir("cli_generate");
    REQUIRE(run(dir, "generate --n 40 --m 3 --seed 4 --out a.csv").code == 0);
    REQUIRE(run(dir, "generate --n 40 --m 3 --seed 4 --out b.csv").code == 0);
    CHECK(slurp(dir + "/a.csv") == slurp(dir + "/b.csv"));
    CHECK(slurp(dir + "/a.labels.csv") == slurp(dir + "/b.labels.csv"));
    CHECK(slurp(dir + "/a.csv").rfind("x1,x2,x3,y\n", 0) == 0);
    CHECK(lines(slurp(dir + "/a.csv")) == 41);
    CHECK(lines(slurp(dir + "/a.labels.csv")) == 41);
    CHECK(lines(slurp(dir + "/a.coefs.csv")) == 4);
    REQUIRE(run(dir, "generate --n 40 --m 3 --seed 5 --out c.csv").code == 0);
    CHECK(slurp(dir + "/a.csv") != slurp(dir + "/c.csv"));
}

TEST_CASE("cli pipeline") {
    const std::string dir = testing_support::scratch_dir("cli_pipeline");
    REQUIRE(run(dir, "generate --n 60 --m 3 --seed 1 --out train.csv").code == 0);
    REQUIRE(run(dir, "generate --n 10 --m 3 --seed 2 --out more.csv").code == 0);

    const Result fit = run(dir, "fit --data train.csv --out sol.json --seed 3" + kFast);
    REQUIRE(fit.code == 0);
    CHECK(fit.out.find("final loss:") != std::string::npos);
    CHECK(fit.out.find("outer iterations:") != std::string::npos);

    SUBCASE("manifest") {
        const auto doc = nlohmann::json::parse(slurp(dir + "/sol.manifest.json"));
        CHECK(doc.at("command") == "fit");
        CHECK(doc.at("seed") == 3);
        CHECK(doc.at("outputs")[0].at("sha256").get<std::string>().size() == 64);
        CHECK(doc.at("inputs")[0].at("path") == "train.csv");
        CHECK(doc.at("parameters").at("lambda_z") == 0.1);
    }
    SUBCASE("rerun reproduces the outputs") {
        const Result again = run(dir, "rerun sol.manifest.json");
        CHECK(again.code == 0);
        CHECK(again.out.find("bit-identically") != std::string::npos);

        auto doc = nlohmann::json::parse(slurp(dir + "/sol.manifest.json"));
        doc["outputs"][0]["sha256"] = std::string(64, '0');
        std::ofstream(dir + "/tampered.json") << doc.dump();
        const Result bad = run(dir, "rerun tampered.json");
        CHECK(bad.code == 4);
        CHECK(bad.err.find("error[numeric]") != std::string::npos);
    }
    SUBCASE("metrics") {
        const Result m = run(dir, "metrics --solution sol.json --k 3 --k 7 --labels train.labels.csv --out rep.json");
        REQUIRE(m.code == 0);
        const auto doc = nlohmann::json::parse(slurp(dir + "/rep.json"));
        CHECK(doc.at("fidelity_knn").size() == 2);
        CHECK(doc.at("purity_knn").contains("7"));
        const std::string csv = slurp(dir + "/rep.csv");
        CHECK(csv.find("fidelity_knn,3,") != std::string::npos);
        CHECK(csv.find("coverage_knn,7,") != std::string::npos);
        CHECK(csv.find("purity_knn,3,") != std::string::npos);
        CHECK(run(dir, "metrics --solution sol.json --k 60 --out bad.json").code == 2);
    }
    SUBCASE("export") {
        REQUIRE(run(dir, "export --solution sol.json --what Z --out z.csv").code == 0);
        CHECK(slurp(dir + "/z.csv").rfind("index,z1,z2\n", 0) == 0);
        CHECK(lines(slurp(dir + "/z.csv")) == 61);
        REQUIRE(run(dir, "export --solution sol.json --what B --out b.csv").code == 0);
        CHECK(slurp(dir + "/b.csv").rfind("index,x1,x2,x3,intercept\n", 0) == 0);
        REQUIRE(run(dir, "export --solution sol.json --out both.csv").code == 0);
        CHECK(slurp(dir + "/both.csv").rfind("index,z1,z2,x1,x2,x3,intercept\n", 0) == 0);
        CHECK(run(dir, "export --solution sol.json --what W --out w.csv").code == 2);
    }
    SUBCASE("plot") {
        REQUIRE(run(dir, "plot --solution sol.json --out e.svg --models-out m.svg --clusters 3").code == 0);
        const std::string svg = slurp(dir + "/e.svg");
        int circles = 0;
        for (auto p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
        CHECK(circles == 60);
        CHECK(slurp(dir + "/m.svg").find("cluster 2") != std::string::npos);
        REQUIRE(run(dir, "plot --solution sol.json --out e2.svg --models-out m2.svg --clusters 3").code == 0);
        CHECK(slurp(dir + "/e2.svg") == svg);
        const Result bad = run(dir, "plot --solution sol.json --color-by coefficient:nope --out x.svg");
        CHECK(bad.code == 2);
        CHECK(bad.err.find("x1, x2, x3, intercept") != std::string::npos);
    }
    SUBCASE("add") {
        const Result a = run(dir, "add --solution sol.json --data more.csv --out new.csv");
        REQUIRE(a.code == 0);
        const std::string csv = slurp(dir + "/new.csv");
        CHECK(csv.rfind("index,z1,z2,x1,x2,x3,intercept,loss\n", 0) == 0);
        CHECK(lines(csv) == 11);

        std::ofstream(dir + "/empty.csv") << "x1,x2,x3,y\n";
        const Result e = run(dir, "add --solution sol.json --data empty.csv --out none.csv");
        CHECK(e.code == 0);
        CHECK(e.err.find("nothing to add") != std::string::npos);

        std::ofstream(dir + "/wrong.csv") << "x1,x2,q,y\n1,2,3,4\n";
        const Result w = run(dir, "add --solution sol.json --data wrong.csv --out none.csv");
        CHECK(w.code == 3);
        CHECK(w.err.find("error[data]") != std::string::npos);
    }
    SUBCASE("sweep") {
        {
            std::ifstream data(dir + "/train.csv"), labels(dir + "/train.labels.csv");
            std::ofstream merged(dir + "/lab.csv");
            std::string a, b;
            std::getline(data, a);
            std::getline(labels, b);
            merged << "x1,x2,x3,c,y\n";
            while (std::getline(data, a) && std::getline(labels, b)) {
                const auto cut = a.rfind(',');
                merged << a.substr(0, cut) << ',' << b << a.substr(cut) << '\n';
            }
        }
        const Result s = run(dir, "sweep --data lab.csv --label-column c --lambda-z 0.01 --lambda-z 1 --k 5 --k 80 --out sw.csv" + kFast);
        REQUIRE(s.code == 0);
        CHECK(s.err.find("skipping k = 80") != std::string::npos);
        const std::string csv = slurp(dir + "/sw.csv");
        CHECK(csv.rfind("lambda_z,seed,k,metric,value\n", 0) == 0);
        // per fit: final_loss, point fidelity and coverage, then three rows for k = 5
        CHECK(lines(csv) == 1 + 2 * 6);
        CHECK(csv.find("0.01,0,5,purity,") != std::string::npos);
        CHECK(csv.find("1,1,0,fidelity,") != std::string::npos);
    }
    SUBCASE("collapse warning") {
        const Result c = run(dir, "fit --data train.csv --out big.json --lambda-z 1e6" + kFast);
        CHECK(c.code == 0);
        CHECK(c.err.find("embedding collapsed") != std::string::npos);
    }
}

TEST_CASE("cli errors and exit codes") {
    const std::string dir = testing_support::scratch_dir("cli_errors");
    REQUIRE(run(dir, "generate --n 30 --m 2 --out d.csv").code == 0);

    const Result missing = run(dir, "fit --data absent.csv --out s.json");
    CHECK(missing.code == 3);
    CHECK(missing.err.find("error[data]") != std::string::npos);

    CHECK(run(dir, "fit --data d.csv --out s.json --bogus").code == 2);
    CHECK(run(dir, "").code == 2);
    CHECK(run(dir, "fit --data d.csv").code == 2);

    const Result lambda = run(dir, "fit --data d.csv --out s.json --lambda-z 0");
    CHECK(lambda.code == 2);
    CHECK(lambda.err.find("error[usage]") != std::string::npos);

    std::ofstream(dir + "/text.csv") << "x1,y\n1,2\nabc,3\n";
    const Result text = run(dir, "fit --data text.csv --out s.json");
    CHECK(text.code == 3);
    CHECK(text.err.find("\"abc\"") != std::string::npos);

    CHECK(run(dir, "fit --data d.csv --target nope --out s.json").code == 3);
    CHECK(run(dir, "metrics --solution d.csv --out r.json").code == 3);
    CHECK(run(dir, "--version").code == 0);
    CHECK(run(dir, "--help").out.find("fit") != std::string::npos);
}
