#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tfem/campaign.hpp"

using namespace tfem;
namespace fs = std::filesystem;

#ifndef TFEM_BIN
#define TFEM_BIN "./tfem"
#endif

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(TFEM_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    f << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

double report_value(const std::string& text, const std::string& key) {
    auto pos = text.find(key + ": ");
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + key.size() + 2));
}

const char* kZeroData = R"(
[domain]
outer = circle 0 0 1.0
inclusion = circle 0 0 0.5

[solver]
h_target = 0.12
)";

const char* kMs1 = R"(
[campaign]
manufactured = ms1

[solver]
h_target = 0.1
seed = 1
)";

}  // namespace

TEST_CASE("zero-data solve exits cleanly with zero norms") {
    fs::path dir = "cli_scratch/zero";
    write_file(dir / "cfg.ini", kZeroData);
    int rc = run_cli("solve " + (dir / "cfg.ini").string() + " --out " + (dir / "out").string());
    CHECK(rc == 0);
    std::string report = slurp(dir / "out" / "report.txt");
    CHECK(report_value(report, "l2_norm") <= 1e-12);
    CHECK(report_value(report, "h1_norm") <= 1e-12);
    CHECK(report_value(report, "sigma") == -1.0);
}

TEST_CASE("convergence campaign is byte-deterministic") {
    fs::path dir = "cli_scratch/conv";
    write_file(dir / "cfg.ini", kMs1);
    int rc1 = run_cli("convergence " + (dir / "cfg.ini").string() + " --levels 2 --out " +
                      (dir / "a").string());
    int rc2 = run_cli("convergence " + (dir / "cfg.ini").string() + " --levels 2 --out " +
                      (dir / "b").string());
    CHECK(rc1 == 0);
    CHECK(rc2 == 0);
    std::string csv1 = slurp(dir / "a" / "convergence.csv");
    std::string csv2 = slurp(dir / "b" / "convergence.csv");
    CHECK(csv1 == csv2);
    CHECK(csv1.rfind("level,h,dofs,l2_err,h1_err,flux_resid,holder_in,holder_cross,"
                     "energy_ratio\n",
                     0) == 0);
    std::string orders = slurp(dir / "a" / "orders.txt");
    double h1_order = report_value(orders, "h1_observed_order");
    CHECK(h1_order > 0.7);
}

TEST_CASE("probe campaign writes the r,phi table and a fit") {
    fs::path dir = "cli_scratch/probe";
    write_file(dir / "cfg.ini", std::string(kMs1) + "\n[campaign]\nprobe_subdomain = 2\n");
    int rc = run_cli("probe " + (dir / "cfg.ini").string() +
                     " --center 0.75,0 --mu 0.5 --levels 4 --out " + (dir / "out").string());
    CHECK(rc == 0);
    std::string csv = slurp(dir / "out" / "probe.csv");
    CHECK(csv.rfind("r,phi\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows
    std::string fit = slurp(dir / "out" / "fit.txt");
    CHECK(fit.find("beta: ") != std::string::npos);
}

TEST_CASE("mesh-info exports the mesh text format") {
    fs::path dir = "cli_scratch/mesh";
    write_file(dir / "cfg.ini", kZeroData);
    int rc = run_cli("mesh-info " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string());
    CHECK(rc == 0);
    std::string mesh = slurp(dir / "out" / "mesh.txt");
    CHECK(mesh.rfind("nodes ", 0) == 0);
    CHECK(mesh.find("triangles") != std::string::npos);
    std::string stats = slurp(dir / "out" / "mesh_stats.txt");
    CHECK(report_value(stats, "min_angle_deg") >= 20.0);
}

TEST_CASE("exit codes follow the error taxonomy") {
    fs::path dir = "cli_scratch/errors";
    // 2: syntax error in the config
    write_file(dir / "syntax.ini", "[domain\nouter = circle 0 0 1\n");
    CHECK(run_cli("solve " + (dir / "syntax.ini").string()) == 2);
    // 3: semantic validation (interface index out of range)
    write_file(dir / "bad_iface.ini",
               "[domain]\nouter = circle 0 0 1\ninclusion = circle 0 0 0.5\n"
               "[interface.3]\ng = 1\n");
    CHECK(run_cli("solve " + (dir / "bad_iface.ini").string()) == 3);
    // 3: h_target violating the mesh precondition
    write_file(dir / "coarse.ini", std::string(kZeroData) + "\n[solver]\nh_target = 0.4\n");
    CHECK(run_cli("solve " + (dir / "coarse.ini").string()) == 3);
    // 5: missing config file
    CHECK(run_cli("solve cli_scratch/errors/enoent.ini") == 5);
    // 2: CLI misuse
    CHECK(run_cli("solve") == 2);
}

TEST_CASE("compare campaign records the path difference") {
    fs::path dir = "cli_scratch/compare";
    write_file(dir / "cfg.ini", kMs1);
    int rc = run_cli("compare " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string());
    CHECK(rc == 0);
    std::string text = slurp(dir / "out" / "compare.txt");
    double rel = report_value(text, "rel_diff_h1");
    CHECK(rel > 0.0);
    CHECK(rel < 0.05);
    CHECK(text.find("path: reduction") != std::string::npos);
    CHECK(text.find("path: direct") != std::string::npos);
}

TEST_CASE("run_campaign rejects unknown kinds in-process") {
    RunConfig cfg = parse_config(kZeroData);
    cfg.kind = "nonsense";
    CHECK_THROWS_AS(run_campaign(cfg), ValidationError);
}

TEST_CASE("campaign CSV is independent of the OpenMP thread count") {
    fs::path dir = "cli_scratch/threads";
    write_file(dir / "cfg.ini", kMs1);
    std::string base = "convergence " + (dir / "cfg.ini").string() + " --levels 2 --out ";
    std::string cmd1 = "OMP_NUM_THREADS=1 " + std::string(TFEM_BIN) + " " + base +
                       (dir / "t1").string() + " >/dev/null 2>&1";
    std::string cmd2 = "OMP_NUM_THREADS=2 " + std::string(TFEM_BIN) + " " + base +
                       (dir / "t2").string() + " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd1.c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
    CHECK(slurp(dir / "t1" / "convergence.csv") == slurp(dir / "t2" / "convergence.csv"));
}
