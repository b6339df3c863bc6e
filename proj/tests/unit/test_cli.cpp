#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "attnlens_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        std::ofstream(d / "small.json") << R"({
  "model": {"n_layers": 1, "n_heads": 2, "d_model": 16, "d_k": 8, "d_ff": 32, "max_seq_len": 32},
  "train": {"epochs": 4},
  "generate": {"n": 400, "min_words": 8, "max_words": 14},
  "bank": {"lime_samples": 30, "shap_permutations": 5, "min_words": 8, "max_words": 14},
  "analysis": {"iterations": 3, "rounds": 40}
})";
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run cli(const std::string& args) {
    const auto dir = workdir();
    const auto cmd = "cd '" + dir.string() + "' && '" + std::string(ATTNLENS_CLI) + "' " + args +
                     " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
}

} // namespace

TEST_CASE("end-to-end command line pipeline") {
    auto gen = cli("gen-corpus --config small.json --seed 3 --out corpus.jsonl");
    REQUIRE(gen.code == 0);
    CHECK(json::parse(gen.out)["texts"] == 400);

    auto t1 = cli("train --config small.json --corpus corpus.jsonl --seed 5 --out m1.json");
    REQUIRE(t1.code == 0);
    CHECK(json::parse(t1.out)["loss_history"].size() == 4);
    auto t2 = cli("train --config small.json --corpus corpus.jsonl --seed 5 --out m2.json");
    REQUIRE(t2.code == 0);
    CHECK(slurp(workdir() / "m1.json") == slurp(workdir() / "m2.json"));

    auto ex = cli("explain --model m1.json --method cls-a --text 'a truly wonderful film'");
    REQUIRE(ex.code == 0);
    const auto e = json::parse(ex.out);
    CHECK(e["method"] == "CLS_A");
    CHECK(e["words"].size() == 4);
    double total = 0;
    for (const auto& w : e["words"]) total += w["score"].get<double>();
    CHECK(total == doctest::Approx(1.0));
    auto lime = cli("explain --model m1.json --method lime --lime-samples 50 --text 'a truly wonderful film'");
    CHECK(lime.code == 0);
    CHECK(json::parse(lime.out)["signed"] == true);

    auto bank = cli("build-bank --config small.json --model m1.json --corpus corpus.jsonl --out bank.json");
    REQUIRE(bank.code == 0);
    CHECK(json::parse(bank.out)["texts"] == 100);

    auto sim = cli("simulate --config small.json --bank bank.json --bots 10 --out data");
    REQUIRE(sim.code == 0);
    CHECK(json::parse(sim.out)["records"] == 1000);

    auto an = cli("analyze --config small.json --responses data/responses-exp1.jsonl --out report");
    REQUIRE(an.code == 0);
    CHECK(json::parse(an.out)["records"] == 1000);
    CHECK(fs::exists(workdir() / "report" / "curves.json"));

    auto rep = cli("report --out report");
    CHECK(rep.code == 0);
    CHECK(rep.out.find("CLS_A") != std::string::npos);
}

TEST_CASE("command line errors") {
    auto unknown = cli("train --no-such-flag");
    CHECK(unknown.code == 2);
    CHECK(json::parse(unknown.err)["error"]["kind"] == "usage");

    auto missing = cli("train --corpus does-not-exist.jsonl");
    CHECK(missing.code == 1);
    CHECK(json::parse(missing.err)["error"]["kind"] == "io");

    CHECK(cli("").code == 2);
    std::ofstream(workdir() / "bad.json") << R"({"modle": {}})";
    CHECK(cli("gen-corpus --config bad.json").code == 2);
    CHECK(cli("explain --model m1.json --method gradcam --text hi").code == 2);
}

TEST_CASE("verbose prints the resolved config") {
    auto v = cli("gen-corpus --config small.json --n 20 --verbose --out tiny.jsonl");
    REQUIRE(v.code == 0);
    const auto cfg = json::parse(v.err);
    CHECK(cfg["subcommand"] == "gen-corpus");
    CHECK(cfg["model"]["d_model"] == 16);
}
