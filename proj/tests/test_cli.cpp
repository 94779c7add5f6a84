#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "tvec/io.hpp"

using namespace tvec;
using namespace tvec::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kToy = TVEC_TOY_DATA;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "tvec");
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

// Runs with the toy corpus and small solver settings writing to `out`.
Result toy(const fs::path& out, std::vector<std::string> args) {
    const std::vector<std::string> common = {
        "--corpus", (kToy / "corpus").string(), "--stopwords", (kToy / "stopwords.txt").string(),
        "--out", out.string(), "--min-count", "2", "--dim", "6", "--epochs", "4", "--local-neighbours", "10",
        "--kmeans-restarts", "2"};
    args.insert(args.end(), common.begin(), common.end());
    return invoke(args);
}

fs::path fresh(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("tvec_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
    return n;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("config text parsing") {
    const auto kv = parse_key_values("# comment\n dim = 12 \n\nmethod=aw2v # trailing\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("dim") == "12");
    CHECK(kv.at("method") == "aw2v");
    CHECK_THROWS_AS(parse_key_values("dim 12\n"), UsageError);
    CHECK_THROWS_AS(parse_key_values("dim = 1\ndim = 2\n"), UsageError);
}

TEST_CASE("run config validation") {
    const RunConfig defaults = make_run_config({});
    CHECK(defaults.window == 5);
    CHECK(defaults.solver.lambda == 10);
    CHECK(defaults.solver.tau == 50);
    CHECK(defaults.solver.gamma == 50);
    CHECK(defaults.solver.epochs == 5);
    CHECK(defaults.rates == std::vector<double>{1, 0.1, 0.01, 0.001});

    const RunConfig c = make_run_config({{"rates", "0.5, 1"}, {"embedding", "u"}, {"checkpoint", "yes"}});
    CHECK(c.rates == std::vector<double>{0.5, 1});
    CHECK(c.embedding == EmbeddingMode::kU);
    CHECK(c.checkpoint);

    try {
        make_run_config({{"lamda", "1"}});
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("did you mean 'lambda'") != std::string::npos);
    }
    CHECK_THROWS_AS(make_run_config({{"dim", "0"}}), UsageError);
    CHECK_THROWS_AS(make_run_config({{"dim", "ten"}}), UsageError);
    CHECK_THROWS_AS(make_run_config({{"tau", "-1"}}), UsageError);
    CHECK_THROWS_AS(make_run_config({{"method", "word2vec"}}), UsageError);
    CHECK_THROWS_AS(make_run_config({{"rates", "0.1, 2"}}), UsageError);
    CHECK_THROWS_AS(make_run_config({{"slices", "odd"}}), UsageError);
}

TEST_CASE("slice selectors") {
    CHECK(select_slices("all", 3) == std::vector<std::size_t>{0, 1, 2});
    CHECK(select_slices("none", 3).empty());
    CHECK(select_slices("every:3", 7) == std::vector<std::size_t>{0, 3, 6});
    CHECK(select_slices("every:2:1", 6) == std::vector<std::size_t>{1, 3, 5});
    CHECK_THROWS_AS(select_slices("every:0", 3), UsageError);
    CHECK_THROWS_AS(select_slices("every:2:2", 3), UsageError);
}

TEST_CASE("edit distance suggestions") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("same", "same") == 0);
    const Vocabulary v({"apple", "apply", "maple", "zebra"});
    CHECK(suggest("appel", v, 2) == std::vector<std::string>{"apple", "apply"});
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(invoke({}).code == kExitUsage);
    CHECK(invoke({"frobnicate"}).code == kExitUsage);
    CHECK(invoke({"--help"}).code == kExitOk);
    const auto missing = invoke({"build", "--corpus", "/nonexistent/corpus/dir"});
    CHECK(missing.code == kExitUsage);
    CHECK(missing.err.find("/nonexistent/corpus/dir") != std::string::npos);
    CHECK(invoke({"train", "--method", "glove"}).code == kExitUsage);
    CHECK(invoke({"build", "--config", "/nonexistent.conf"}).code == kExitUsage);
    CHECK(invoke({"train", "--out", fresh("nothing").string()}).code == kExitUsage);
}

TEST_CASE("config file values are overridden by flags") {
    const auto dir = fresh("override");
    fs::create_directories(dir);
    std::ofstream(dir / "run.conf") << "corpus = " << (kToy / "corpus").string() << "\nout = " << (dir / "out").string()
                                    << "\nmin_count = 1000000\n";
    CHECK(invoke({"build", "--config", (dir / "run.conf").string()}).code == kExitUsage);  // empty vocabulary
    CHECK(invoke({"build", "--config", (dir / "run.conf").string(), "--min-count", "2"}).code == kExitOk);
    std::ofstream(dir / "bad.conf") << "epochz = 3\n";
    CHECK(invoke({"build", "--config", (dir / "bad.conf").string()}).code == kExitUsage);
}

TEST_CASE("end-to-end on the toy corpus") {
    const auto out = fresh("toy");
    const auto build = toy(out, {"build"});
    REQUIRE(build.code == kExitOk);
    CHECK(count_files(out / "stats", ".tvco") == 3);
    CHECK(count_files(out / "ppmi", ".tvpm") == 3);
    CHECK(fs::exists(out / "vocab.tsv"));
    CHECK(build.out.find("T=3") != std::string::npos);

    SUBCASE("build is deterministic") {
        const auto again = fresh("toy_again");
        REQUIRE(toy(again, {"build"}).code == kExitOk);
        for (const auto* rel : {"vocab.tsv", "manifest.json", "stats/1990.tvco", "ppmi/2010.tvpm"})
            CHECK(io::read_file(out / rel) == io::read_file(again / rel));
    }

    SUBCASE("dw2v logs a non-increasing objective and supports queries") {
        const auto tr = toy(out, {"train", "--method", "dw2v"});
        REQUIRE(tr.code == kExitOk);
        const auto report = nlohmann::json::parse(io::read_file(out / "dw2v" / "train.json"));
        const auto obj = report.at("objective").get<std::vector<double>>();
        REQUIRE(obj.size() == 4);
        for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] <= obj[i - 1] * (1 + 1e-12));
        CHECK(lines(tr.err).size() == 4);
        CHECK(fs::exists(out / "dw2v" / "embeddings.tvem"));
        CHECK(fs::exists(out / "dw2v" / "embeddings.txt"));

        const auto self = toy(out, {"query", "--word", "apple", "--label", "1990", "--k", "1"});
        REQUIRE(self.code == kExitOk);
        CHECK(self.out.find("apple") != std::string::npos);
        CHECK(self.out.find("1.0000") != std::string::npos);

        const auto all = toy(out, {"query", "--word", "apple", "--label", "1990", "--all-years", "--k", "3"});
        REQUIRE(all.code == kExitOk);
        CHECK(lines(all.out).size() == 3);

        const auto oov = toy(out, {"query", "--word", "appel", "--label", "1990"});
        CHECK(oov.code == kExitLookup);
        CHECK(oov.err.find("did you mean") != std::string::npos);
        CHECK(oov.err.find("apple") != std::string::npos);
        CHECK(toy(out, {"query", "--word", "apple", "--label", "1850"}).code == kExitLookup);

        const auto ev = toy(out, {"evaluate", "--testset", (kToy / "testset.csv").string(), "--triplets",
                                  (kToy / "triplets.csv").string()});
        REQUIRE(ev.code == kExitOk);
        const auto bytes = io::read_file(out / "dw2v" / "evaluation.json");
        const auto j = nlohmann::json::parse(bytes);
        std::vector<std::string> keys;
        for (const auto& [k, v] : j.items()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        CHECK(keys == std::vector<std::string>{"f_beta", "mp", "mrr", "nmi"});
        for (const auto* k : {"10", "15", "20"}) {
            CHECK(j.at("nmi").contains(k));
            CHECK(j.at("f_beta").contains(k));
        }
        for (const auto* k : {"1", "3", "5", "10"}) CHECK(j.at("mp").contains(k));
        CHECK(toy(out, {"evaluate", "--testset", (kToy / "testset.csv").string(), "--triplets",
                        (kToy / "triplets.csv").string()})
                  .code == kExitOk);
        CHECK(io::read_file(out / "dw2v" / "evaluation.json") == bytes);

        const auto norms = toy(out, {"export-norms", "--words", "apple,cloud"});
        REQUIRE(norms.code == kExitOk);
        CHECK(lines(norms.out).size() == 1 + 2 * 3);
        CHECK(lines(norms.out).front() == "word,label,norm");
        CHECK(toy(out, {"export-norms", "--words", "zzzz"}).code == kExitLookup);
    }

    SUBCASE("baseline methods") {
        REQUIRE(toy(out, {"train", "--method", "aw2v"}).code == kExitOk);
        CHECK(fs::exists(out / "aw2v" / "per_slice.tvem"));
        CHECK(fs::exists(out / "aw2v" / "embeddings.tvem"));
        REQUIRE(toy(out, {"train", "--method", "sw2v"}).code == kExitOk);
        const auto sw = io::read_embeddings(out / "sw2v" / "embeddings.tvem");
        CHECK(sw.matrices[0] == sw.matrices[2]);
        REQUIRE(toy(out, {"train", "--method", "tw2v"}).code == kExitOk);
        const auto q = toy(out, {"query", "--method", "tw2v", "--word", "pear", "--label", "1990", "--target-label",
                                 "2010", "--k", "3"});
        CHECK(q.code == kExitOk);
        CHECK(toy(out, {"evaluate", "--method", "tw2v", "--testset", (kToy / "testset.csv").string()}).code == kExitOk);
    }

    SUBCASE("empty evaluation exits with code 4") {
        REQUIRE(toy(out, {"train"}).code == kExitOk);
        const auto dir = fresh("empty_eval");
        fs::create_directories(dir);
        std::ofstream(dir / "t.csv") << "query_word,query_label,target_label,answer_word\nnope,1990,2000,nada\n";
        CHECK(toy(out, {"evaluate", "--testset", (dir / "t.csv").string()}).code == kExitEmptyEvaluation);
    }

    SUBCASE("robustness table") {
        const auto r = toy(out, {"robustness", "--testset", (kToy / "testset.csv").string(), "--rates", "1,0.1",
                                 "--slices", "every:2"});
        REQUIRE(r.code == kExitOk);
        const auto j = nlohmann::json::parse(io::read_file(out / "robustness.json"));
        REQUIRE(j.at("rows").size() == 4);
        CHECK(j.at("subsampled_labels") == nlohmann::json::array({1990, 2010}));

        // The rate-1 rows equal a run on the unmodified counts.
        const auto ev_dw = toy(out, {"train"});
        REQUIRE(ev_dw.code == kExitOk);
        REQUIRE(toy(out, {"evaluate", "--testset", (kToy / "testset.csv").string()}).code == kExitOk);
        const auto dw = nlohmann::json::parse(io::read_file(out / "dw2v" / "evaluation.json"));
        CHECK(j.at("rows")[0].at("method") == "dw2v");
        CHECK(j.at("rows")[0].at("mrr") == dw.at("mrr"));
    }
}

TEST_CASE("perfectly aligned embeddings score MRR 1") {
    const auto out = fresh("aligned");
    REQUIRE(toy(out, {"build"}).code == kExitOk);
    const auto vocab = io::read_vocabulary(out / "vocab.tsv");
    // Same orthogonal-ish rows in every slice: every word's nearest neighbour
    // across slices is itself.
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(vocab.size()));
    m.diagonal().setOnes();
    fs::create_directories(out / "dw2v");
    io::write_embeddings(out / "dw2v" / "embeddings.tvem", {{1990, 2000, 2010}, {m, m, m}});

    const auto dir = fresh("aligned_ts");
    fs::create_directories(dir);
    std::ofstream ts(dir / "t.csv");
    ts << "query_word,query_label,target_label,answer_word\n";
    for (const auto& w : vocab.words()) ts << w << ",1990,2010," << w << "\n";
    ts.close();
    REQUIRE(toy(out, {"evaluate", "--testset", (dir / "t.csv").string()}).code == kExitOk);
    const auto j = nlohmann::json::parse(io::read_file(out / "dw2v" / "evaluation.json"));
    CHECK(j.at("mrr").get<double>() == 1.0);
    CHECK(j.at("nmi").is_null());
}
