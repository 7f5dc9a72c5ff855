#include <cmath>
#include <random>

#include "doctest.h"
#include "tfem/geometry.hpp"

using namespace tfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Ray-crossing containment oracle against a dense polyline, independent of
// the polar-radius logic used by InterfaceCurve::contains.
bool winding_oracle_inside(const InterfaceCurve& c, const Vec2& p) {
    const int n = 4096;
    int crossings = 0;
    Vec2 prev = c.point(0.0);
    for (int i = 1; i <= n; ++i) {
        Vec2 cur = c.point(2 * kPi * i / n);
        if ((prev.y() > p.y()) != (cur.y() > p.y())) {
            double xint = prev.x() + (p.y() - prev.y()) * (cur.x() - prev.x()) /
                                         (cur.y() - prev.y());
            if (xint > p.x()) ++crossings;
        }
        prev = cur;
    }
    return crossings % 2 == 1;
}

}  // namespace

TEST_CASE("circle inward normals at cardinal points") {
    auto c = InterfaceCurve::circle(Vec2(0, 0), 0.5);
    Vec2 n0 = c.normal_at_arclength(0.0);  // point (0.5, 0)
    CHECK(n0.x() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(n0.y()) < 1e-12);
    Vec2 n1 = c.normal_at_arclength(0.25 * c.length());  // point (0, 0.5)
    CHECK(std::abs(n1.x()) < 1e-12);
    CHECK(n1.y() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(n0.norm() - 1.0) < 1e-12);
    // s wraps modulo length
    Vec2 nw = c.normal_at_arclength(c.length() + 0.25 * c.length());
    CHECK((nw - n1).norm() < 1e-12);
}

TEST_CASE("ellipse normal against implicit-gradient oracle") {
    double a = 0.5, b = 0.25;
    auto c = InterfaceCurve::ellipse(Vec2(0, 0), a, b);
    // At (0.5, 0): oracle = normalized gradient of (x/a)^2+(y/b)^2, flipped
    // toward the center.
    Vec2 n = c.inward_normal(0.0);
    CHECK(n.x() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(n.y()) < 1e-12);
    for (double t : {0.3, 1.1, 2.0, 4.4}) {
        Vec2 p = c.point(t);
        Vec2 grad(2 * p.x() / (a * a), 2 * p.y() / (b * b));
        Vec2 oracle = -grad.normalized();  // inward
        CHECK((c.inward_normal(t) - oracle).norm() < 1e-10);
    }
}

TEST_CASE("boundary quadrature sums") {
    auto c = InterfaceCurve::circle(Vec2(0, 0), 0.5);
    auto nodes = boundary_quadrature(c, 256);
    double len = 0.0, int_cos = 0.0;
    Vec2 normal_sum = Vec2::Zero();
    for (const auto& q : nodes) {
        len += q.weight;
        int_cos += q.weight * std::cos(q.param);
        normal_sum += q.weight * q.normal;
    }
    CHECK(len == doctest::Approx(kPi).epsilon(1e-8));
    CHECK(std::abs(int_cos) < 1e-10);
    CHECK(normal_sum.norm() < 1e-8);  // closed curve: net normal is zero
    CHECK_THROWS_AS(boundary_quadrature(c, 0), ValidationError);
}

TEST_CASE("enclosed areas") {
    CHECK(enclosed_area(InterfaceCurve::circle(Vec2(0.3, -0.1), 0.5)) ==
          doctest::Approx(kPi * 0.25).epsilon(1e-10));
    CHECK(enclosed_area(InterfaceCurve::ellipse(Vec2(0, 0), 0.5, 0.25)) ==
          doctest::Approx(kPi * 0.5 * 0.25).epsilon(1e-10));
}

TEST_CASE("classify_point on disk with inclusion") {
    DomainPartition part(InterfaceCurve::circle(Vec2(0, 0), 1.0),
                         {InterfaceCurve::circle(Vec2(0, 0), 0.5)}, {-1});
    CHECK(part.classify(Vec2(0, 0)).subdomain == 1);
    CHECK(part.classify(Vec2(0.75, 0)).subdomain == 2);
    auto hit = part.classify(Vec2(0.5, 0), 1e-12);
    CHECK(hit.on_interface());
    CHECK(hit.interface_id == 0);
    CHECK_THROWS_AS(part.classify(Vec2(2, 0)), OutsideDomainError);
    // tol = 0 forces a subdomain answer even on the curve
    CHECK_FALSE(part.classify(Vec2(0.5 + 1e-15, 0), 0.0).on_interface());
}

TEST_CASE("classify_point agrees with the winding-number oracle") {
    auto inc1 = InterfaceCurve::ellipse(Vec2(-0.3, 0.1), 0.25, 0.15);
    auto inc2 = InterfaceCurve::perturbed_circle(Vec2(0.4, -0.2), 0.2, {{3, 0.02}}, 0.5);
    DomainPartition part(InterfaceCurve::circle(Vec2(0, 0), 1.0), {inc1, inc2}, {-1, -1});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int tested = 0;
    while (tested < 1000) {
        Vec2 p(u(rng), u(rng));
        if (p.norm() > 0.98) continue;
        ++tested;
        int expected = 3;
        if (winding_oracle_inside(inc1, p)) expected = 1;
        if (winding_oracle_inside(inc2, p)) expected = 2;
        CHECK(part.classify(p, 0.0).subdomain == expected);
    }
}

TEST_CASE("nested partition classification and areas") {
    auto outer = InterfaceCurve::circle(Vec2(0, 0), 1.0);
    auto mid = InterfaceCurve::circle(Vec2(0, 0), 0.6);
    auto core = InterfaceCurve::circle(Vec2(0, 0), 0.3);
    // inclusion 0 = core (inside inclusion 1), inclusion 1 = mid
    DomainPartition part(outer, {core, mid}, {1, -1});
    CHECK(part.num_subdomains() == 3);
    CHECK(part.classify(Vec2(0, 0)).subdomain == 1);
    CHECK(part.classify(Vec2(0.45, 0)).subdomain == 2);
    CHECK(part.classify(Vec2(0.8, 0)).subdomain == 3);
    CHECK(part.subdomain_area(1) == doctest::Approx(kPi * 0.09).epsilon(1e-9));
    CHECK(part.subdomain_area(2) == doctest::Approx(kPi * (0.36 - 0.09)).epsilon(1e-9));
    CHECK(part.subdomain_area(3) == doctest::Approx(kPi * (1.0 - 0.36)).epsilon(1e-9));
}

TEST_CASE("partition validation rejects touching and misdeclared curves") {
    auto outer = InterfaceCurve::circle(Vec2(0, 0), 1.0);
    // Touching the outer boundary
    CHECK_THROWS_AS(DomainPartition(outer, {InterfaceCurve::circle(Vec2(0.5, 0), 0.5)}, {-1}),
                    ValidationError);
    // Overlapping inclusions
    CHECK_THROWS_AS(DomainPartition(outer,
                                    {InterfaceCurve::circle(Vec2(-0.2, 0), 0.3),
                                     InterfaceCurve::circle(Vec2(0.2, 0), 0.3)},
                                    {-1, -1}),
                    ValidationError);
    // Nested but declared disjoint
    CHECK_THROWS_AS(DomainPartition(outer,
                                    {InterfaceCurve::circle(Vec2(0, 0), 0.5),
                                     InterfaceCurve::circle(Vec2(0, 0), 0.2)},
                                    {-1, -1}),
                    ValidationError);
}

TEST_CASE("arclength parameterization round-trip") {
    auto c = InterfaceCurve::ellipse(Vec2(0.1, 0.2), 0.7, 0.4);
    for (double s : {0.0, 0.37, 1.2, 2.9}) {
        double t = c.param_at_arclength(s);
        CHECK(c.arclength_at(t) == doctest::Approx(s).epsilon(1e-10));
    }
    // closest_param: exact for points constructed on the curve
    for (double t : {0.2, 1.7, 3.3, 5.9}) {
        Vec2 p = c.point(t);
        CHECK(c.distance(p) < 1e-10);
        CHECK((c.point(c.closest_param(p + 1e-3 * c.inward_normal(t))) - p).norm() < 1e-5);
    }
}

TEST_CASE("tangent Holder estimate is finite and stable for a C^{1,alpha} curve") {
    auto c = InterfaceCurve::perturbed_circle(Vec2(0, 0), 0.5, {{3, 0.05}, {5, 0.02}}, 0.5);
    double est1 = tangent_holder_estimate(c, 0.5, 10000, 99);
    double est2 = tangent_holder_estimate(c, 0.5, 20000, 99);
    CHECK(est1 > 0.0);
    CHECK(std::isfinite(est1));
    CHECK(std::isfinite(est2));
    // Doubling the sample count keeps the estimate within 10%.
    CHECK(est2 >= est1 * (1.0 - 1e-12));
    CHECK(est2 <= est1 * 1.10);
    // A plain circle has a much smaller quotient at the same exponent.
    auto circle = InterfaceCurve::circle(Vec2(0, 0), 0.5);
    CHECK(tangent_holder_estimate(circle, 0.5, 10000, 99) < est1);
}

TEST_CASE("perturbed circle validation") {
    CHECK_THROWS_AS(InterfaceCurve::perturbed_circle(Vec2(0, 0), 0.1, {{2, -0.2}}, 0.5),
                    ValidationError);  // radius dips below zero
    CHECK_THROWS_AS(InterfaceCurve::perturbed_circle(Vec2(0, 0), 0.5, {{2, 0.01}}, 1.5),
                    ValidationError);  // exponent out of (0,1]
    auto ok = InterfaceCurve::perturbed_circle(Vec2(0, 0), 0.5, {{4, 0.03}}, 0.7);
    CHECK(ok.length() > 2 * kPi * 0.5);
}
