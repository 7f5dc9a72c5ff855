#include "tfem/campaign.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tfem/analysis.hpp"

namespace tfem {

namespace {

namespace fs = std::filesystem;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open output file " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    return dir;
}

struct Prepared {
    TransmissionProblem problem;
    std::optional<ManufacturedSolution> ms;
};

Prepared prepare(const RunConfig& cfg) {
    if (cfg.uses_manufactured()) {
        ManufacturedSolution ms = cfg.build_manufactured();
        TransmissionProblem prob{ms.partition, ms.data, 0.9};
        return {std::move(prob), std::move(ms)};
    }
    return {cfg.build_problem(), std::nullopt};
}

void run_solve(const RunConfig& cfg) {
    auto dir = prepare_out_dir(cfg);
    Prepared prep = prepare(cfg);
    TriMesh mesh = generate_fitted_mesh(prep.problem.partition, cfg.h_target, cfg.seed);
    SolveReport rep = solve_by_reduction(prep.problem, mesh, cfg.solve_options());
    std::string text = rep.to_text();
    if (prep.ms) {
        ErrorReport err = error_vs_exact(rep.u, *prep.ms);
        text += "l2_err: " + fmt_g(err.l2) + "\n";
        text += "h1_err: " + fmt_g(err.h1) + "\n";
    }
    write_text(dir / "report.txt", text);
}

void run_compare(const RunConfig& cfg) {
    auto dir = prepare_out_dir(cfg);
    Prepared prep = prepare(cfg);
    TriMesh mesh = generate_fitted_mesh(prep.problem.partition, cfg.h_target, cfg.seed);
    SolveOptions opts = cfg.solve_options();
    SolveReport red = solve_by_reduction(prep.problem, mesh, opts);
    SolveReport dir_rep = solve_direct(prep.problem, mesh, opts);

    DiscreteField diff = red.u;
    diff.values = red.u.values - dir_rep.u.values;
    FieldNorms nd = norms(diff, prep.problem.partition);
    FieldNorms nu = norms(dir_rep.u, prep.problem.partition);

    std::string text;
    text += "campaign: compare\n";
    text += "diff_l2: " + fmt_g(nd.l2) + "\n";
    text += "diff_h1: " + fmt_g(nd.h1) + "\n";
    text += "rel_diff_l2: " + fmt_g(nu.l2 > 0 ? nd.l2 / nu.l2 : 0.0) + "\n";
    text += "rel_diff_h1: " + fmt_g(nu.h1 > 0 ? nd.h1 / nu.h1 : 0.0) + "\n";
    text += "--- reduction report ---\n" + red.to_text();
    text += "--- direct report ---\n" + dir_rep.to_text();
    write_text(dir / "compare.txt", text);
}

void run_convergence(const RunConfig& cfg) {
    auto dir = prepare_out_dir(cfg);
    Prepared prep = prepare(cfg);
    if (!prep.ms) throw ValidationError("convergence campaign requires a manufactured solution");
    SolveOptions opts = cfg.solve_options();

    std::vector<ConvergenceRow> rows;
    std::vector<double> hs, l2s, h1s;
    TriMesh mesh = generate_fitted_mesh(prep.problem.partition, cfg.h_target, cfg.seed);
    std::string reports;
    for (int level = 0; level < cfg.levels; ++level) {
        if (level > 0) mesh = refine(mesh, prep.problem.partition);
        SolveReport rep = solve_by_reduction(prep.problem, mesh, opts);
        ErrorReport err = error_vs_exact(rep.u, *prep.ms);
        double flux = 0.0;
        for (int j = 0; j < prep.problem.partition.num_inclusions(); ++j)
            flux += flux_jump_residual(rep.u, prep.problem.partition, prep.problem.coeff, j);
        HolderEstimate hest = holder_seminorm(rep.u, prep.problem.partition, cfg.holder_alpha,
                                              4.0 * mesh.h, 10000, cfg.seed);
        ConvergenceRow row;
        row.level = level;
        row.h = mesh.h;
        row.dofs = rep.u.dofs->total();
        row.l2_err = err.l2;
        row.h1_err = err.h1;
        row.flux_resid = flux;
        row.holder_in = *std::max_element(hest.per_subdomain.begin(), hest.per_subdomain.end());
        row.holder_cross = hest.cross_interface;
        row.energy_ratio = rep.energy_ratio;
        rows.push_back(row);
        hs.push_back(mesh.h);
        l2s.push_back(err.l2);
        h1s.push_back(err.h1);
        reports += "--- level " + std::to_string(level) + " ---\n" + rep.to_text();
    }
    write_convergence_csv((dir / "convergence.csv").string(), rows);
    std::string summary;
    summary += "levels: " + std::to_string(cfg.levels) + "\n";
    summary += "l2_observed_order: " + fmt_g(observed_order(hs, l2s)) + "\n";
    summary += "h1_observed_order: " + fmt_g(observed_order(hs, h1s)) + "\n";
    write_text(dir / "orders.txt", summary);
    write_text(dir / "reports.txt", reports);
}

void run_probe(const RunConfig& cfg) {
    auto dir = prepare_out_dir(cfg);
    Prepared prep = prepare(cfg);
    TriMesh mesh = generate_fitted_mesh(prep.problem.partition, cfg.h_target, cfg.seed);
    SolveReport rep = solve_by_reduction(prep.problem, mesh, cfg.solve_options());
    double r0 = cfg.probe_r0 > 0 ? cfg.probe_r0 : 0.1 * prep.problem.partition.diameter();
    OscillationProbe probe = probe_oscillation(rep.u, prep.problem.partition, cfg.probe_center,
                                               r0, cfg.probe_mu, cfg.probe_levels,
                                               cfg.probe_subdomain);
    write_probe_csv((dir / "probe.csv").string(), probe);
    DecayFit fit = decay_fit(probe);
    std::string text;
    text += "center: " + fmt_g(cfg.probe_center.x()) + " " + fmt_g(cfg.probe_center.y()) + "\n";
    text += "mu: " + fmt_g(cfg.probe_mu) + "\n";
    text += "beta: " + fmt_g(fit.beta) + "\n";
    text += "constant: " + fmt_g(fit.constant) + "\n";
    text += "fit_residual: " + fmt_g(fit.residual) + "\n";
    text += std::string("degenerate: ") + (fit.degenerate ? "1" : "0") + "\n";
    write_text(dir / "fit.txt", text);
    write_text(dir / "report.txt", rep.to_text());
}

void run_mesh_info(const RunConfig& cfg) {
    auto dir = prepare_out_dir(cfg);
    Prepared prep = prepare(cfg);
    TriMesh mesh = generate_fitted_mesh(prep.problem.partition, cfg.h_target, cfg.seed);
    MeshStats stats = mesh_statistics(mesh, prep.problem.partition);
    write_text(dir / "mesh_stats.txt", stats.to_text());
    write_mesh_text(mesh, (dir / "mesh.txt").string());
}

}  // namespace

void run_campaign(const RunConfig& cfg) {
    if (cfg.kind == "solve")
        run_solve(cfg);
    else if (cfg.kind == "compare")
        run_compare(cfg);
    else if (cfg.kind == "convergence")
        run_convergence(cfg);
    else if (cfg.kind == "probe")
        run_probe(cfg);
    else if (cfg.kind == "mesh-info")
        run_mesh_info(cfg);
    else
        throw ValidationError("unknown campaign kind '" + cfg.kind + "'");
}

}  // namespace tfem
