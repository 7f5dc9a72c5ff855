#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tfem/expression.hpp"
#include "tfem/manufactured.hpp"
#include "tfem/transmission.hpp"

namespace tfem {

/// Parsed campaign configuration (sectioned key-value text). Geometry and
/// data may instead come from a built-in manufactured solution.
struct RunConfig {
    // [campaign]
    std::string kind = "solve";  // solve | compare | convergence | probe | mesh-info
    int levels = 4;
    double holder_alpha = 0.5;
    Vec2 probe_center = Vec2::Zero();
    double probe_mu = 0.5;
    double probe_r0 = 0.0;  // 0: pick from geometry
    int probe_levels = 5;
    int probe_subdomain = 0;
    std::string manufactured;  // "" or "ms1"
    std::string out_dir = "out";

    // [domain] (ignored when manufactured is set)
    std::optional<DomainPartition> partition;

    // [coefficients] / [interface.k] expression strings
    int n = 1;
    double kappa = 0.5;
    std::vector<std::string> A_expr;  // per subdomain, isotropic scalar
    std::vector<std::string> F_expr;  // per subdomain, 2n comma-separated ("" = zero)
    std::vector<std::string> f_expr;  // per subdomain, n comma-separated ("" = zero)
    std::vector<std::string> g_expr;  // per interface, n comma-separated ("" = zero)

    // [solver]
    Basis basis = Basis::P1;
    double tol_lin = 1e-10;
    int quad_degree = 0;
    double h_target = 0.1;
    std::uint64_t seed = 1;

    std::string raw_text;  // original config text (hash material)

    bool uses_manufactured() const { return !manufactured.empty(); }
    /// Geometry + data of the run (compiling expressions, or the built-in
    /// manufactured instance).
    TransmissionProblem build_problem() const;
    ManufacturedSolution build_manufactured() const;
    SolveOptions solve_options() const;
};

/// Parses and validates; ParseError carries line/column, ValidationError
/// names the offending key.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

}  // namespace tfem
