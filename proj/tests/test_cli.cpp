#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch() {
    auto dir = fs::temp_directory_path() / "memdse_cli_test";
    fs::create_directories(dir);
    return dir;
}

Result run(const std::string& args) {
    const auto dir = scratch();
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + MEMDSE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

const std::string kSrc = MEMDSE_SOURCE_DIR;

} // namespace

TEST_SUITE("cli") {

TEST_CASE("stats on the bundled tiny_cnn") {
    const auto r = run("stats " + kSrc + "/workloads/tiny_cnn.json");
    REQUIRE(r.code == 0);
    // Weight 21440 B, activations 209104 B, 3285652 FLOPs.
    CHECK(r.out.find("tiny_cnn") != std::string::npos);
    CHECK(r.out.find(" 0.02 ") != std::string::npos);
    CHECK(r.out.find(" 0.20 ") != std::string::npos);
    CHECK(r.out.find(" 0.00 ") != std::string::npos);
}

TEST_CASE("stats on a weightless graph") {
    const auto r = run("stats " + kSrc + "/workloads/probe_stream.json");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("probe_stream                     0.00") != std::string::npos);
}

TEST_CASE("missing workload file") {
    const auto r = run("stats /nonexistent.json");
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("usage errors exit with 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("sweep").code == 1);
    CHECK(run("--help").code == 0);
}

TEST_CASE("sweep writes the report files") {
    const auto out = scratch() / "sweep_default";
    fs::remove_all(out);
    const auto r = run("sweep " + kSrc + "/workloads/encoder_decoder_cnn.json --config " + kSrc +
                       "/configs/default.json --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(out / "heatmap.csv")) == 16);
    CHECK(lines(slurp(out / "breakdown.csv")) == 16);
    CHECK(lines(slurp(out / "pareto.csv")) >= 2);
    CHECK(slurp(out / "regime.txt").find("regime: ") != std::string::npos);
    CHECK(r.out.find("best (") != std::string::npos);
}

TEST_CASE("sweep --grid 1x1 and --trace") {
    const auto out = scratch() / "sweep_1x1";
    fs::remove_all(out);
    const auto r = run("sweep " + kSrc + "/workloads/tiny_cnn.json --grid 1x1 --trace --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(out / "heatmap.csv")) == 2);
    CHECK(lines(slurp(out / "pareto.csv")) == 2);
    CHECK(fs::exists(out / "trace_llc_16MB.csv"));
    CHECK(run("sweep " + kSrc + "/workloads/tiny_cnn.json --grid 9x1 --out " + out.string()).code == 1);
    CHECK(run("sweep " + kSrc + "/workloads/tiny_cnn.json --grid banana --out " + out.string()).code == 1);
}

TEST_CASE("config referencing a missing tech file") {
    const auto cfg = scratch() / "bad_config.json";
    std::ofstream(cfg) << R"({"version": 1, "tech": "missing_tech.json"})";
    const auto r = run("sweep " + kSrc + "/workloads/tiny_cnn.json --config " + cfg.string() + " --out " +
                       (scratch() / "unused").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("missing_tech.json") != std::string::npos);
}

TEST_CASE("model errors exit with 2") {
    const auto tech = scratch() / "tiny_dram_tech.json";
    auto text = slurp(kSrc + "/configs/tech_default.json");
    text.replace(text.find("\"8GB\""), 5, "\"1MB\"");
    std::ofstream(tech) << text;
    const auto cfg = scratch() / "tiny_dram.json";
    std::ofstream(cfg) << R"({"version": 1, "tech": ")" + tech.string() + R"("})";
    const auto r = run("sweep " + kSrc + "/workloads/probe_reuse_24mb.json --config " + cfg.string() + " --out " +
                       (scratch() / "unused").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("DRAM capacity") != std::string::npos);
}

TEST_CASE("map") {
    const auto r = run("map " + kSrc + "/workloads/tiny_cnn.json --l1 32KB --llc 16MB");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("conv1") != std::string::npos);
    CHECK(r.out.find("relu1") != std::string::npos);
    // Compulsory traffic: x 12288 + weights 21440 + probs 40.
    CHECK(r.out.find("dram_bytes 33768") != std::string::npos);
    CHECK(run("map " + kSrc + "/workloads/tiny_cnn.json --l1 32XB --llc 16MB").code == 1);
}

TEST_CASE("gen is deterministic and validated") {
    const auto a = run("gen --family cost_volume --seed 4 -p levels=2");
    const auto b = run("gen --family cost_volume --seed 4 -p levels=2");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("\"cost_volume\"") != std::string::npos);
    CHECK(run("gen --family attention_matcher -p tokens=0").code == 1);
    CHECK(run("gen --family nope").code == 1);
    CHECK(run("gen --family mlp_ray -p depth").code == 1);
}

TEST_CASE("pareto reads a heatmap") {
    const auto out = scratch() / "sweep_for_pareto";
    fs::remove_all(out);
    REQUIRE(run("sweep " + kSrc + "/workloads/tiny_cnn.json --out " + out.string()).code == 0);
    const auto r = run("pareto " + (out / "heatmap.csv").string());
    REQUIRE(r.code == 0);
    CHECK(r.out == slurp(out / "pareto.csv"));
    const auto bad = scratch() / "bad_heatmap.csv";
    std::ofstream(bad) << "l1,llc\n1,2\n";
    CHECK(run("pareto " + bad.string()).code == 1);
}

} // TEST_SUITE
