// Batch driver for the transmission-problem solver: parses a problem
// configuration and runs one campaign per process.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "tfem/campaign.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    int levels = -1;
    std::string center;
    double mu = -1.0;
    double h_target = -1.0;
    long seed = -1;
};

void add_common(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("config", o.config_path, "problem configuration file")->required();
    cmd->add_option("--out", o.out_dir, "artifact output directory");
    cmd->add_option("--h-target", o.h_target, "target mesh spacing");
    cmd->add_option("--seed", o.seed, "campaign seed");
}

int fail(const char* category, const std::string& message, int code) {
    std::fprintf(stderr, "error category=%s message=\"%s\"\n", category, message.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-element solver for elliptic transmission problems"};
    app.require_subcommand(1);

    CliOverrides o;
    CLI::App* c_solve = app.add_subcommand("solve", "run the reduction pipeline once");
    CLI::App* c_compare = app.add_subcommand("compare", "run both pipelines and diff them");
    CLI::App* c_conv = app.add_subcommand("convergence", "refinement study with CSV output");
    CLI::App* c_probe = app.add_subcommand("probe", "mean-oscillation decay probe");
    CLI::App* c_mesh = app.add_subcommand("mesh-info", "generate and report the mesh");
    for (CLI::App* c : {c_solve, c_compare, c_conv, c_probe, c_mesh}) add_common(c, o);
    c_conv->add_option("--levels", o.levels, "number of refinement levels");
    c_probe->add_option("--center", o.center, "probe center as x,y");
    c_probe->add_option("--mu", o.mu, "radius ladder ratio");
    c_probe->add_option("--levels", o.levels, "radius ladder length");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        return fail("parse", e.what(), 2);
    }

    try {
        tfem::RunConfig cfg = tfem::parse_config_file(o.config_path);
        cfg.kind = app.get_subcommands().front()->get_name();
        if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
        if (o.levels > 0 && cfg.kind == "convergence") cfg.levels = o.levels;
        if (o.levels > 0 && cfg.kind == "probe") cfg.probe_levels = o.levels;
        if (o.mu > 0) cfg.probe_mu = o.mu;
        if (o.h_target > 0) cfg.h_target = o.h_target;
        if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
        if (!o.center.empty()) {
            double x, y;
            if (std::sscanf(o.center.c_str(), "%lf,%lf", &x, &y) != 2)
                return fail("parse", "--center expects x,y", 2);
            cfg.probe_center = tfem::Vec2(x, y);
        }
        tfem::run_campaign(cfg);
        return 0;
    } catch (const tfem::ParseError& e) {
        return fail("parse", e.what(), 2);
    } catch (const tfem::ValidationError& e) {
        return fail("validation", e.what(), 3);
    } catch (const tfem::UnknownInterfaceError& e) {
        return fail("validation", e.what(), 3);
    } catch (const tfem::IoError& e) {
        return fail("io", e.what(), 5);
    } catch (const tfem::Error& e) {
        return fail("numerical", e.what(), 4);
    } catch (const std::exception& e) {
        return fail("numerical", e.what(), 4);
    }
}
