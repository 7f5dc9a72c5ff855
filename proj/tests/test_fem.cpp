#include <cstdio>
#include <fstream>
#include <cmath>
#include <random>

#include "doctest.h"
#include "tfem/analysis.hpp"
#include "tfem/fem.hpp"
#include "tfem/manufactured.hpp"

using namespace tfem;

namespace {

constexpr double kPi = 3.14159265358979323846;

TriMesh single_right_triangle() {
    TriMesh m;
    m.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
    m.triangles = {{{0, 1, 2}, 1}};
    m.node_curve.assign(3, {});
    m.h = std::sqrt(2.0);
    return m;
}

// Two-triangle unit square with all boundary nodes pinned.
TriMesh two_triangle_square() {
    TriMesh m;
    m.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    m.triangles = {{{0, 1, 2}, 1}, {{0, 2, 3}, 1}};
    m.node_curve.assign(4, {});
    for (auto& nc : m.node_curve) nc.curve = -1;
    m.boundary_edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    m.h = std::sqrt(2.0);
    return m;
}

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& K) { return Eigen::MatrixXd(K); }

// Torsion-problem center value on the unit square via the separated series;
// converges geometrically through the cosh terms.
double poisson_center_series() {
    double sum = 0.0;
    for (int k = 1; k <= 19; k += 2) {
        double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
        sum += sign / (k * k * k * std::cosh(k * kPi / 2));
    }
    return 0.125 - (4.0 / (kPi * kPi * kPi)) * sum;
}

}  // namespace

TEST_CASE("P1 local stiffness on the unit right triangle") {
    TriMesh m = single_right_triangle();
    CoefficientField coeff = CoefficientField::laplacian(1, 0);
    DofMap dofs(m, Basis::P1, 1);
    Eigen::MatrixXd K = dense(assemble_stiffness(m, coeff, dofs));
    // Hand integration of the P1 gradients: K = 1/2 [[2,-1,-1],[-1,1,0],[-1,0,1]]
    Eigen::Matrix3d ref;
    ref << 2, -1, -1, -1, 1, 0, -1, 0, 1;
    ref *= 0.5;
    CHECK((K - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("stiffness is linear in A and decouples per component") {
    TriMesh m = single_right_triangle();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField one = CoefficientField::laplacian(1, 0);
    CoefficientField three(1, 1, 0);
    three.set_scalar(1, [](const Vec2&) { return 3.0; });
    Eigen::MatrixXd K1 = dense(assemble_stiffness(m, one, dofs));
    Eigen::MatrixXd K3 = dense(assemble_stiffness(m, three, dofs));
    CHECK((K3 - 3.0 * K1).cwiseAbs().maxCoeff() < 1e-13);

    // n = 2 with identity coupling: block diagonal, two copies of the scalar
    // matrix, zero cross blocks.
    CoefficientField sys(2, 1, 0);
    DofMap dofs2(m, Basis::P1, 2);
    Eigen::MatrixXd K2 = dense(assemble_stiffness(m, sys, dofs2));
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            CHECK(K2(2 * a, 2 * b) == doctest::Approx(K1(a, b)).epsilon(1e-14));
            CHECK(K2(2 * a + 1, 2 * b + 1) == doctest::Approx(K1(a, b)).epsilon(1e-14));
            CHECK(K2(2 * a, 2 * b + 1) == 0.0);
            CHECK(K2(2 * a + 1, 2 * b) == 0.0);
        }
}

TEST_CASE("volume loads: zero data, constant source, constant flux") {
    TriMesh m = single_right_triangle();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField zero = CoefficientField::laplacian(1, 0);
    CHECK(assemble_volume_load(m, zero, dofs).cwiseAbs().maxCoeff() == 0.0);

    CoefficientField withf(1, 1, 0);
    withf.set_source(1, [](const Vec2&, double* o) { o[0] = 1.0; });
    Eigen::VectorXd L = assemble_volume_load(m, withf, dofs);
    for (int i = 0; i < 3; ++i) CHECK(L[i] == doctest::Approx(1.0 / 6).epsilon(1e-14));

    // F = (1,0): entries are -integral of d(phi)/dx.
    CoefficientField withF(1, 1, 0);
    withF.set_flux(1, [](const Vec2&, double* o) {
        o[0] = 1.0;
        o[1] = 0.0;
    });
    Eigen::VectorXd LF = assemble_volume_load(m, withF, dofs);
    CHECK(LF[0] == doctest::Approx(0.5).epsilon(1e-14));   // -(area * -1)
    CHECK(LF[1] == doctest::Approx(-0.5).epsilon(1e-14));  // -(area * +1)
    CHECK(std::abs(LF[2]) < 1e-15);
}

TEST_CASE("interface load sums") {
    DomainPartition part(InterfaceCurve::circle(Vec2(0, 0), 1.0),
                         {InterfaceCurve::circle(Vec2(0, 0), 0.5)}, {-1});
    TriMesh m = generate_fitted_mesh(part, 0.05);
    DofMap dofs(m, Basis::P1, 1);

    CoefficientField zero = CoefficientField::laplacian(2, 1);
    CHECK(assemble_interface_load(m, part, 0, zero, dofs, -1.0).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(assemble_interface_load(m, part, 3, zero, dofs, 1.0),
                    UnknownInterfaceError);

    CoefficientField ones = CoefficientField::laplacian(2, 1);
    ones.set_interface_data(0, [](const Vec2&, double, double* o) { o[0] = 1.0; });
    // Arc quadrature reproduces sigma * curve length exactly; the partition
    // of unity spreads it over the interface dofs.
    double sigma = -1.0;
    Eigen::VectorXd L = assemble_interface_load(m, part, 0, ones, dofs, sigma,
                                                LineGeometry::Arc);
    CHECK(L.sum() == doctest::Approx(sigma * kPi).epsilon(1e-9));
    // Chord quadrature integrates over the inscribed polygon instead.
    Eigen::VectorXd Lc = assemble_interface_load(m, part, 0, ones, dofs, sigma,
                                                 LineGeometry::Chord);
    double poly_len = 0.0;
    for (const auto& ie : m.interface_edges) poly_len += (m.nodes[ie.a] - m.nodes[ie.b]).norm();
    CHECK(Lc.sum() == doctest::Approx(sigma * poly_len).epsilon(1e-12));
    CHECK(std::abs(Lc.sum()) < std::abs(L.sum()));

    // Odd data cancels over the closed curve.
    CoefficientField odd = CoefficientField::laplacian(2, 1);
    odd.set_interface_data(0, [](const Vec2&, double t, double* o) { o[0] = std::cos(t); });
    CHECK(std::abs(assemble_interface_load(m, part, 0, odd, dofs, 1.0, LineGeometry::Arc).sum()) <
          1e-10);

    // Support only on interface dofs.
    for (int v = 0; v < m.num_nodes(); ++v)
        if (m.node_curve[v].curve != 0) CHECK(L[v] == 0.0);
}

TEST_CASE("load assembly is linear in the data") {
    DomainPartition part(InterfaceCurve::circle(Vec2(0, 0), 1.0),
                         {InterfaceCurve::circle(Vec2(0, 0), 0.5)}, {-1});
    TriMesh m = generate_fitted_mesh(part, 0.1);
    DofMap dofs(m, Basis::P1, 1);
    auto make_g = [&](double a, double b) {
        CoefficientField c = CoefficientField::laplacian(2, 1);
        c.set_interface_data(0, [a, b](const Vec2&, double t, double* o) {
            o[0] = a * std::cos(t) + b * std::sin(3 * t);
        });
        return c;
    };
    Eigen::VectorXd L1 = assemble_interface_load(m, part, 0, make_g(1, 0), dofs, -1.0);
    Eigen::VectorXd L2 = assemble_interface_load(m, part, 0, make_g(0, 1), dofs, -1.0);
    Eigen::VectorXd L12 = assemble_interface_load(m, part, 0, make_g(2.5, -1.25), dofs, -1.0);
    CHECK((L12 - 2.5 * L1 + 1.25 * L2).cwiseAbs().maxCoeff() <
          1e-12 * std::max(1.0, L12.cwiseAbs().maxCoeff()));
}

TEST_CASE("stiffness symmetry and pure-Neumann row sums") {
    DomainPartition part(InterfaceCurve::circle(Vec2(0, 0), 1.0),
                         {InterfaceCurve::circle(Vec2(0, 0), 0.5)}, {-1});
    TriMesh m = generate_fitted_mesh(part, 0.1);
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff(1, 2, 1);
    coeff.set_scalar(1, [](const Vec2& p) { return 2.0 + p.x(); });
    coeff.set_scalar(2, [](const Vec2& p) { return 1.0 + 0.5 * p.y() * p.y(); });
    auto K = assemble_stiffness(m, coeff, dofs);
    CHECK(matrix_asymmetry(K) <= 1e-12);
    // Constants lie in the kernel of the pure Neumann operator.
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(dofs.total());
    double kmax = 0.0;
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
            kmax = std::max(kmax, std::abs(it.value()));
    CHECK((K * ones).cwiseAbs().maxCoeff() <= 1e-10 * kmax);
}

TEST_CASE("raising the quadrature degree does not move polynomial assemblies") {
    TriMesh m = single_right_triangle();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff(1, 1, 0);
    coeff.set_scalar(1, [](const Vec2& p) { return 1.0 + 2.0 * p.x() + p.y(); });
    Eigen::MatrixXd K4 = dense(assemble_stiffness(m, coeff, dofs, 4));
    Eigen::MatrixXd K6 = dense(assemble_stiffness(m, coeff, dofs, 6));
    CHECK((K4 - K6).cwiseAbs().maxCoeff() <= 1e-12 * K4.cwiseAbs().maxCoeff());
}

TEST_CASE("OpenMP assembly matches the serial reference bitwise") {
    ManufacturedSolution ms = ms1();
    TriMesh m = generate_fitted_mesh(ms.partition, 0.07);
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff(1, 2, 1);
    coeff.set_scalar(1, [](const Vec2& p) { return 2.0 + std::sin(p.x()); });
    coeff.set_scalar(2, [](const Vec2& p) { return 1.0 + p.squaredNorm(); });
    coeff.set_flux(2, [](const Vec2& p, double* o) {
        o[0] = p.y();
        o[1] = -p.x();
    });
    coeff.set_source(1, [](const Vec2& p, double* o) { o[0] = std::cos(3 * p.x()); });

    auto Ks = assemble_stiffness(m, coeff, dofs, 0, Parallelism::Serial);
    auto Kp = assemble_stiffness(m, coeff, dofs, 0, Parallelism::OpenMP);
    REQUIRE(Ks.nonZeros() == Kp.nonZeros());
    for (int k = 0; k < Ks.outerSize(); ++k) {
        Eigen::SparseMatrix<double>::InnerIterator is(Ks, k), ip(Kp, k);
        for (; is && ip; ++is, ++ip) {
            CHECK(is.row() == ip.row());
            CHECK(is.value() == ip.value());
        }
    }
    Eigen::VectorXd bs = assemble_volume_load(m, coeff, dofs, 0, Parallelism::Serial);
    Eigen::VectorXd bp = assemble_volume_load(m, coeff, dofs, 0, Parallelism::OpenMP);
    CHECK((bs - bp).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_dirichlet trivial cases") {
    TriMesh m = two_triangle_square();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff = CoefficientField::laplacian(1, 0);
    SparseSystem sys;
    sys.K = assemble_stiffness(m, coeff, dofs);
    sys.b = Eigen::VectorXd::Zero(dofs.total());
    DiscreteField u = solve_dirichlet(sys, dofs, m);
    CHECK(u.max_abs() == 0.0);
}

TEST_CASE("Poisson on the unit square hits the series value at the center") {
    double ref = poisson_center_series();
    CHECK(ref == doctest::Approx(0.0736713).epsilon(2e-5));  // frozen reference

    auto part = DomainPartition::single(Box{Vec2(0, 0), Vec2(1, 1)});
    TriMesh m = generate_fitted_mesh(part, 1.0 / 32);
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff(1, 1, 0);
    coeff.set_source(1, [](const Vec2&, double* o) { o[0] = 1.0; });
    SparseSystem sys;
    sys.K = assemble_stiffness(m, coeff, dofs);
    sys.b = assemble_volume_load(m, coeff, dofs);
    SolveInfo info;
    DiscreteField u = solve_dirichlet(sys, dofs, m, 1e-10, 0, &info);
    CHECK(info.converged);
    CHECK(info.rel_residual <= 1e-10);
    PointLocator loc(m);
    int e = loc.locate(Vec2(0.5, 0.5));
    REQUIRE(e >= 0);
    CHECK(u.value_at(e, Vec2(0.5, 0.5), 0) == doctest::Approx(ref).epsilon(5e-3 / ref));
    // Boundary dofs are exactly zero.
    for (int sd : dofs.boundary_scalar_dofs()) CHECK(u.values[sd] == 0.0);
}

TEST_CASE("solve_mean_zero compatibility guard and trivial solve") {
    TriMesh m = two_triangle_square();
    for (auto& nc : m.node_curve) nc.curve = -2;  // pure Neumann: nothing pinned
    m.boundary_edges.clear();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff = CoefficientField::laplacian(1, 0);
    SparseSystem sys;
    sys.K = assemble_stiffness(m, coeff, dofs);
    sys.b = Eigen::VectorXd::Zero(dofs.total());
    sys.constraint = assemble_mass_vector(m, dofs);
    DiscreteField w = solve_mean_zero(sys, dofs, m);
    CHECK(w.max_abs() == 0.0);

    // A mean-shifted rhs is incompatible with the pure Neumann operator.
    sys.b = Eigen::VectorXd::Ones(dofs.total());
    CHECK_THROWS_AS(solve_mean_zero(sys, dofs, m), IncompatibleDataError);

    // Compatible rhs: solution exists and has exact zero weighted mean.
    Eigen::VectorXd b(4);
    b << 1.0, -0.25, -0.5, -0.25;
    sys.b = b;
    DiscreteField w2 = solve_mean_zero(sys, dofs, m);
    CHECK(std::abs(sys.constraint.dot(w2.values)) <= 1e-12 * w2.max_abs());
    CHECK((sys.K * w2.values - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("P2 space reproduces quadratics") {
    auto part = DomainPartition::single(Box{Vec2(0, 0), Vec2(1, 1)});
    TriMesh m = generate_fitted_mesh(part, 0.25);
    auto dofs = std::make_shared<DofMap>(m, Basis::P2, 1);
    DiscreteField u;
    u.mesh = &m;
    u.dofs = dofs;
    u.values.resize(dofs->total());
    for (int sd = 0; sd < dofs->scalar_count(); ++sd) {
        Vec2 p = dofs->dof_point(sd);
        u.values[sd] = p.x() * p.x();
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u01(0.05, 0.95);
    PointLocator loc(m);
    for (int k = 0; k < 20; ++k) {
        Vec2 p(u01(rng), u01(rng));
        int e = loc.locate(p);
        REQUIRE(e >= 0);
        CHECK(u.value_at(e, p, 0) == doctest::Approx(p.x() * p.x()).epsilon(1e-12));
        CHECK((u.gradient_at(e, p, 0) - Vec2(2 * p.x(), 0)).norm() < 1e-11);
    }
    // L2^2 of x^2 over the unit square is exactly 1/5 at this quadrature.
    FieldNorms nn = norms(u, part);
    CHECK(nn.l2 * nn.l2 == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("asymmetric systems fall back to a nonsymmetric Krylov solve") {
    TriMesh m = two_triangle_square();
    DofMap dofs(m, Basis::P1, 1);
    CoefficientField coeff(1, 1, 0);
    // Nonsymmetric 2x2 spatial matrix (still strongly elliptic).
    coeff.set_matrix(1, [](const Vec2&) {
        Eigen::Matrix2d a;
        a << 1.0, 0.3, -0.3, 1.0;
        return a;
    });
    SparseSystem sys;
    sys.K = assemble_stiffness(m, coeff, dofs);
    CHECK(matrix_asymmetry(sys.K) > 1e-12);
    sys.b = Eigen::VectorXd::Zero(dofs.total());
    sys.b[0] = 1.0;  // interior dof? all boundary here; solution stays zero
    SolveInfo info;
    DiscreteField u = solve_dirichlet(sys, dofs, m, 1e-10, 0, &info);
    CHECK(info.used_bicgstab);
    CHECK_FALSE(info.symmetric);
    CHECK(u.max_abs() == 0.0);  // every dof pinned on this tiny mesh
}

TEST_CASE("ellipticity validator on reference tensors") {
    auto part = DomainPartition::single(Box{Vec2(0, 0), Vec2(1, 1)});
    // Identity tensor: worst ratio is exactly 1.
    CoefficientField id = CoefficientField::laplacian(1, 0);
    EllipticityReport r1 = verify_ellipticity(id, part, 1.0, 1000, 100);
    CHECK(r1.pass);
    CHECK(r1.min_ratio == doctest::Approx(1.0).epsilon(1e-12));

    CoefficientField aniso(1, 1, 0);
    aniso.set_matrix(1, [](const Vec2&) {
        Eigen::Matrix2d a;
        a << 2.0, 0.0, 0.0, 0.5;
        return a;
    });
    EllipticityReport r2 = verify_ellipticity(aniso, part, 1.0, 1000, 100);
    CHECK_FALSE(r2.pass);
    CHECK(r2.min_ratio == doctest::Approx(0.5).epsilon(1e-3));
    EllipticityReport r3 = verify_ellipticity(aniso, part, 0.4, 1000, 100);
    CHECK(r3.pass);
    CHECK_THROWS_AS(verify_ellipticity(id, part, -1.0, 10), ValidationError);
}

TEST_CASE("inverted elements are rejected at assembly") {
    TriMesh bad;
    bad.nodes = {Vec2(0, 0), Vec2(0, 1), Vec2(1, 0)};  // clockwise
    bad.triangles = {{{0, 1, 2}, 1}};
    bad.node_curve.assign(3, {});
    DofMap dofs(bad, Basis::P1, 1);
    CoefficientField coeff = CoefficientField::laplacian(1, 0);
    CHECK_THROWS_AS(assemble_stiffness(bad, coeff, dofs), SingularElementError);
}

TEST_CASE("triplet text export for debugging") {
    TriMesh m = single_right_triangle();
    DofMap dofs(m, Basis::P1, 1);
    auto K = assemble_stiffness(m, CoefficientField::laplacian(1, 0), dofs);
    write_matrix_triplets(K, "triplets_scratch.txt");
    std::ifstream f("triplets_scratch.txt");
    int rows = 0;
    std::string line;
    double sum = 0;
    while (std::getline(f, line)) {
        ++rows;
        int r, c;
        double v;
        REQUIRE(std::sscanf(line.c_str(), "%d %d %lf", &r, &c, &v) == 3);
        sum += v;
    }
    CHECK(rows == 9);
    CHECK(std::abs(sum) < 1e-14);  // pure Neumann stiffness rows sum to zero
}
