#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(NTA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("nta_cli_" + name);
    fs::remove_all(d);
    return d;
}

std::string header(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("run writes records, summaries and a manifest") {
    const fs::path d = scratch("run");
    REQUIRE(run("run --preset main --seeds 2 --set n_blocks=2 --set tau_B=0.2 --set batch_size=0 --out " + d.string()) ==
            0);
    CHECK(fs::exists(d / "run_0.csv"));
    CHECK(fs::exists(d / "run_1.csv"));
    CHECK(fs::exists(d / "summary_1.json"));
    CHECK(header(d / "run_0.csv").rfind("t,block,", 0) == 0);
    std::ifstream in(d / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    CHECK(m["command"] == "run");
    CHECK(m["seeds"].size() == 2);
    CHECK(m["config"]["n_blocks"] == "2");
    CHECK(run("report " + d.string()) == 0);
}

TEST_CASE("sweep writes the grid") {
    const fs::path d = scratch("sweep");
    REQUIRE(run("sweep --seeds 1 --set grid_points=2 --set total_time=0.4 --set block_min=0.2 --set block_max=0.4 "
                "--set ratio_max=4 --out " + d.string()) == 0);
    CHECK(header(d / "grid.csv") == "axis1,axis2,seed,total_alignment,failed,dt,n_blocks");
    CHECK(fs::exists(d / "manifest.json"));
}

TEST_CASE("configuration errors exit with 2") {
    const fs::path d = scratch("bad");
    CHECK(run("run --preset nope --out " + d.string()) == 2);
    CHECK(run("run --set bogus=1 --out " + d.string()) == 2);
    CHECK(run("run --set tau_w=-1 --out " + d.string()) == 2);
    CHECK(run("run --config /nonexistent/x.cfg --out " + d.string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("deep --preset main --out " + d.string()) == 2);
}

TEST_CASE("unwritable output exits with 3") {
    const fs::path d = scratch("io");
    fs::create_directories(d);
    {
        std::ofstream f(d / "file");
        f << "x";
    }
    CHECK(run("run --set n_blocks=1 --set tau_B=0.05 --seeds 1 --out " + (d / "file" / "sub").string()) == 3);
    CHECK(run("report /nonexistent-dir") == 3);
}

TEST_CASE("numerical abort exits with 4") {
    const fs::path d = scratch("abort");
    CHECK(run("run --seeds 1 --set n_blocks=1 --set tau_w=1e-4 --set tau_c=1e-4 --set dt=0.01 --out " + d.string()) ==
          4);
    CHECK(fs::exists(d / "run_0.csv"));
}

TEST_CASE("presets and help") {
    CHECK(run("presets") == 0);
    CHECK(run("presets fc") == 0);
    CHECK(run("presets nope") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
}

TEST_CASE("re-running the echoed manifest config reproduces the CSVs") {
    const fs::path a = scratch("echo_a");
    const fs::path b = scratch("echo_b");
    REQUIRE(run("run --seeds 1 --seed 3 --set n_blocks=2 --set tau_B=0.1 --set batch_size=7 --out " + a.string()) == 0);
    std::ifstream in(a / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    const fs::path cfg = a / "echo.cfg";
    {
        std::ofstream out(cfg);
        for (auto it = m["config"].begin(); it != m["config"].end(); ++it)
            out << it.key() << " = " << it.value().get<std::string>() << "\n";
    }
    REQUIRE(run("run --config " + cfg.string() + " --out " + b.string()) == 0);
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const std::string x = slurp(a / "run_3.csv");
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b / "run_3.csv"));
}
