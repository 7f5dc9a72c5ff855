#include <cmath>

#include "doctest.h"
#include "tfem/config.hpp"

using namespace tfem;

namespace {

const char* kMinimal = R"(
[domain]
outer = circle 0 0 1.0
inclusion = circle 0 0 0.5

[interface.1]
g = cos(theta)

[campaign]
kind = solve
)";

}  // namespace

TEST_CASE("minimal config parses into a two-subdomain problem") {
    RunConfig cfg = parse_config(kMinimal);
    REQUIRE(cfg.partition.has_value());
    CHECK(cfg.partition->num_subdomains() == 2);
    CHECK(cfg.kind == "solve");
    CHECK(cfg.g_expr[0] == "cos(theta)");
    TransmissionProblem prob = cfg.build_problem();
    // g evaluates to cos of the curve parameter on the interface.
    double g;
    const InterfaceCurve& c = prob.partition.inclusion(0);
    prob.coeff.eval_interface(0, c.point(1.2), 1.2, &g);
    CHECK(g == doctest::Approx(std::cos(1.2)).epsilon(1e-14));
}

TEST_CASE("unknown interface index names the key") {
    const char* bad = R"(
[domain]
outer = circle 0 0 1.0
inclusion = circle 0 0 0.5

[interface.3]
g = 1
)";
    try {
        parse_config(bad);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("g.3") != std::string::npos);
    }
}

TEST_CASE("syntax errors carry line numbers") {
    try {
        parse_config("[domain\nouter = circle 0 0 1");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
    }
    CHECK_THROWS_AS(parse_config("key_without_section = 1"), ParseError);
    CHECK_THROWS_AS(parse_config("[domain]\nouter = circle 0 0"), ParseError);
}

TEST_CASE("validation rules") {
    CHECK_THROWS_AS(parse_config("[campaign]\nkind = fly"), ValidationError);
    CHECK_THROWS_AS(parse_config("[campaign]\nkind = convergence"), ValidationError);
    CHECK_THROWS_AS(parse_config("[weird]\nx = 1"), ValidationError);
    CHECK_THROWS_AS(parse_config("[domain]\nouter = circle 0 0 1\n[coefficients]\nzz = 1"),
                    ValidationError);
    // manufactured excludes explicit geometry
    CHECK_THROWS_AS(parse_config("[campaign]\nmanufactured = ms1\n[domain]\nouter = box 0 0 1 1"),
                    ValidationError);
    // bad expression is a validation problem naming the key
    try {
        parse_config("[domain]\nouter = circle 0 0 1\ninclusion = circle 0 0 0.4\n"
                     "[interface.1]\ng = cos(");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("g.1") != std::string::npos);
    }
    // arity mismatch against n
    CHECK_THROWS_AS(
        parse_config("[domain]\nouter = circle 0 0 1\ninclusion = circle 0 0 0.4\n"
                     "[coefficients]\nn = 2\n[interface.1]\ng = 1"),
        ValidationError);
}

TEST_CASE("guarded expressions are accepted at parse time") {
    RunConfig cfg = parse_config(
        "[domain]\nouter = circle 0 0 1\ninclusion = circle 0 0 0.4\n"
        "[interface.1]\ng = 1/(x-x)");
    TransmissionProblem prob = cfg.build_problem();
    double g;
    CHECK_THROWS_AS(prob.coeff.eval_interface(0, Vec2(0.4, 0), 0.0, &g), EvalError);
}

TEST_CASE("manufactured config builds MS-1") {
    RunConfig cfg = parse_config("[campaign]\nmanufactured = ms1\nkind = compare");
    CHECK(cfg.uses_manufactured());
    ManufacturedSolution ms = cfg.build_manufactured();
    CHECK(ms.name == "ms1");
    CHECK(ms.partition.num_subdomains() == 2);
}

TEST_CASE("solver and campaign keys land in the config") {
    RunConfig cfg = parse_config(R"(
[domain]
outer = box -1 -1 1 1
inclusion = ellipse 0 0 0.4 0.3
inclusion = circle 0.02 0.01 0.1 parent=1

[coefficients]
n = 1
kappa = 0.4
A.1 = 2 + x
f.2 = sin(x)*y
F.3 = y, 0 - x

[interface.2]
g = theta

[solver]
basis = 2
tol_lin = 1e-12
h_target = 0.04
seed = 9

[campaign]
kind = probe
probe_center = 0.7, -0.1
probe_mu = 0.25
probe_levels = 6
out = artifacts
)");
    CHECK(cfg.basis == Basis::P2);
    CHECK(cfg.tol_lin == 1e-12);
    CHECK(cfg.h_target == 0.04);
    CHECK(cfg.seed == 9);
    CHECK(cfg.probe_mu == 0.25);
    CHECK(cfg.probe_levels == 6);
    CHECK(cfg.probe_center.x() == doctest::Approx(0.7));
    CHECK(cfg.out_dir == "artifacts");
    REQUIRE(cfg.partition.has_value());
    CHECK(cfg.partition->num_subdomains() == 3);
    CHECK(cfg.partition->parent_of(1) == 0);
    CHECK(cfg.A_expr[0] == "2 + x");
    CHECK(cfg.f_expr[1] == "sin(x)*y");
    CHECK(cfg.F_expr[2] == "y, 0 - x");
    CHECK(cfg.g_expr[1] == "theta");
    TransmissionProblem prob = cfg.build_problem();
    CHECK(prob.kappa == 0.4);
    CHECK(prob.coeff.num_interfaces() == 2);
}
