#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int status = 0;
    std::string output;
};

Outcome run(const std::string& args) {
    const std::string command = std::string(ROBUSTCURVE_CLI) + " " + args + " 2>&1";
    Outcome out;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (fgets(buf.data(), buf.size(), pipe) != nullptr) out.output += buf.data();
    const int raw = pclose(pipe);
    out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("robustcurve_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("synth is deterministic") {
    const auto a = scratch("synth_a");
    const auto b = scratch("synth_b");
    REQUIRE(run("synth --seed 7 --t 200 --out " + a.string()).status == 0);
    REQUIRE(run("synth --seed 7 --t 200 --out " + b.string()).status == 0);
    CHECK(slurp(a / "yields.csv") == slurp(b / "yields.csv"));
    CHECK(slurp(a / "indicators.csv") == slurp(b / "indicators.csv"));
    CHECK(fs::exists(a / "manifest.json"));
    const auto c = scratch("synth_c");
    REQUIRE(run("synth --seed 8 --t 200 --out " + c.string()).status == 0);
    CHECK(slurp(a / "yields.csv") != slurp(c / "yields.csv"));
}

TEST_CASE("error reporting") {
    const auto dir = scratch("errors");
    REQUIRE(run("synth --seed 1 --t 120 --out " + dir.string()).status == 0);
    const std::string data = " --yields " + (dir / "yields.csv").string() + " --indicators " +
                             (dir / "indicators.csv").string() + " --out " + (dir / "o").string();

    const auto k = run("fadns --k 11" + data);
    CHECK(k.status == 3);
    CHECK(k.output.find("\"error\":\"config\"") != std::string::npos);

    const auto scheme = run("combine --scheme FC-BOGUS" + data);
    CHECK(scheme.status == 2);
    for (const char* id : {"FC-EW", "FC-RANK", "FC-RMSE", "FC-MSE", "FC-OLS", "FC-MV", "FC-STACK", "FC-JMA", "FC-LAD",
                           "AFTER-ROLLING", "AFTER-EWMA", "AFTER-SIMPLIFIED", "FC-DRO-ES", "FC-DRMV", "FC-DRO-MIX"}) {
        CHECK(scheme.output.find(id) != std::string::npos);
    }

    std::ofstream(dir / "bad.csv") << "date,M3\n2020-01-31,1\n2020-03-31,2\n";
    const auto ingest = run("dns --yields " + (dir / "bad.csv").string() + " --out " + (dir / "o").string());
    CHECK(ingest.status == 4);
    CHECK(ingest.output.find("\"error\":\"ingestion\"") != std::string::npos);
    CHECK(ingest.output.find("line 3") != std::string::npos);

    std::ofstream(dir / "bad.cfg") << "window_w = 1\n";
    const auto cfg = run("dns --config " + (dir / "bad.cfg").string() + " --yields " + (dir / "yields.csv").string() +
                         " --out " + (dir / "o").string());
    CHECK(cfg.status == 3);

    CHECK(run("nosuchcommand").status == 2);
}

TEST_CASE("dns and breaks write their artifacts") {
    const auto dir = scratch("dns");
    REQUIRE(run("synth --seed 2 --t 100 --out " + dir.string()).status == 0);
    const std::string yields = " --yields " + (dir / "yields.csv").string();
    REQUIRE(run("dns --horizons 1,3" + yields + " --out " + (dir / "dns").string()).status == 0);
    const std::string table = slurp(dir / "dns" / "rmsfe_DNS.csv");
    CHECK(table.rfind("maturity,h1,h3\nM3,", 0) == 0);
    CHECK(fs::exists(dir / "dns" / "forecasts_dns.csv"));
    const std::string manifest = slurp(dir / "dns" / "manifest.json");
    CHECK(manifest.find("rmsfe_DNS.csv") != std::string::npos);
    CHECK(manifest.find("sha256") != std::string::npos);

    REQUIRE(run("breaks" + yields + " --out " + (dir / "breaks").string()).status == 0);
    CHECK(slurp(dir / "breaks" / "breaks.csv").rfind("maturity,break_index,break_date\n", 0) == 0);
}
