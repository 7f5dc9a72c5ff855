#include "tfem/transmission.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "tfem/analysis.hpp"
#include "tfem/manufactured.hpp"
#include "tfem/quadrature.hpp"

namespace tfem {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ||g||_L2 over a curve, by true-curve quadrature.
double interface_data_l2(const DomainPartition& partition, const CoefficientField& coeff,
                         int curve) {
    if (coeff.interface_is_zero(curve)) return 0.0;
    const int n = coeff.n();
    std::vector<double> g(n);
    double acc = 0.0;
    for (const auto& node : boundary_quadrature(partition.inclusion(curve), 512)) {
        coeff.eval_interface(curve, node.point, node.param, g.data());
        for (int i = 0; i < n; ++i) acc += node.weight * g[i] * g[i];
    }
    return std::sqrt(acc);
}

// ||F||_L2 and ||f||_L2 over the mesh.
void volume_data_l2(const TriMesh& mesh, const CoefficientField& coeff, double& F_l2,
                    double& f_l2) {
    const int n = coeff.n();
    const auto& rule = triangle_rule(4);
    std::vector<double> Fq(2 * n), fq(n);
    double aF = 0.0, af = 0.0;
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& t = mesh.triangles[e];
        double area = mesh.area(e);
        for (const auto& qp : rule) {
            Vec2 x = qp.l0 * mesh.nodes[t.v[0]] + qp.l1 * mesh.nodes[t.v[1]] +
                     qp.l2 * mesh.nodes[t.v[2]];
            coeff.eval_flux(t.tag, x, Fq.data());
            coeff.eval_source(t.tag, x, fq.data());
            double w = qp.w * area;
            for (int i = 0; i < 2 * n; ++i) aF += w * Fq[i] * Fq[i];
            for (int i = 0; i < n; ++i) af += w * fq[i] * fq[i];
        }
    }
    F_l2 = std::sqrt(aF);
    f_l2 = std::sqrt(af);
}

std::string problem_fingerprint(const TransmissionProblem& problem, const SolveOptions& opts,
                                const char* path) {
    std::ostringstream os;
    os << path << ";n=" << problem.coeff.n() << ";M=" << problem.partition.num_subdomains()
       << ";kappa=" << fmt_g(problem.kappa) << ";basis=" << static_cast<int>(opts.basis)
       << ";tol=" << fmt_g(opts.tol_lin) << ";quad=" << opts.quad_degree << ";" << opts.label;
    for (int i = 0; i < problem.partition.num_inclusions(); ++i) {
        const auto& c = problem.partition.inclusion(i);
        os << ";curve" << i << "=" << static_cast<int>(c.kind()) << "," << fmt_g(c.center().x())
           << "," << fmt_g(c.center().y()) << "," << fmt_g(c.base_radius());
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

void fill_common_report(SolveReport& rep, const TransmissionProblem& problem,
                        const TriMesh& mesh, const SolveOptions& opts) {
    rep.basis = opts.basis;
    rep.mesh_stats = mesh_statistics(mesh, problem.partition);
    FieldNorms nn = norms(rep.u, problem.partition);
    rep.l2_norm = nn.l2;
    rep.h1_norm = nn.h1;
    rep.l2_sub = nn.l2_sub;
    rep.h1_sub = nn.h1_sub;

    double F_l2, f_l2;
    volume_data_l2(mesh, problem.coeff, F_l2, f_l2);
    rep.data_norm = F_l2 + f_l2;
    for (int j = 0; j < problem.partition.num_inclusions(); ++j)
        rep.data_norm += interface_data_l2(problem.partition, problem.coeff, j);
    rep.energy_ratio = rep.data_norm > 0 ? rep.h1_norm / rep.data_norm : 0.0;

    const int m = problem.partition.num_subdomains();
    rep.max_gradient_per_subdomain.assign(m, 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        double g2 = 0.0;
        for (int c = 0; c < problem.coeff.n(); ++c)
            g2 += rep.u.gradient_rep(e, c).squaredNorm();
        auto& slot = rep.max_gradient_per_subdomain[mesh.triangles[e].tag - 1];
        slot = std::max(slot, std::sqrt(g2));
    }
}

}  // namespace

void TransmissionProblem::validate(bool check_ellipticity) const {
    if (coeff.num_interfaces() != partition.num_inclusions())
        throw ValidationError("problem: one g per inclusion curve is required");
    if (coeff.num_subdomains() < partition.num_subdomains())
        throw ValidationError("problem: coefficients missing for some subdomains");
    if (check_ellipticity) {
        EllipticityReport rep = verify_ellipticity(coeff, partition, kappa, 1000, 100);
        if (!rep.pass)
            throw ValidationError("problem: sampled ellipticity check failed (min ratio " +
                                  std::to_string(rep.min_ratio) + ", max block " +
                                  std::to_string(rep.max_block) + ")");
    }
}

double pinned_interface_sign() {
    static std::once_flag flag;
    static double sigma = 0.0;
    std::call_once(flag, [] {
        ManufacturedSolution ms = ms1();
        TriMesh mesh = generate_fitted_mesh(ms.partition, 0.22, 3);
        DofMap dofs(mesh, Basis::P1, 1);
        auto K = assemble_stiffness(mesh, ms.data, dofs, 0, Parallelism::Serial);
        double best_err = 1e300, best_sigma = 0.0, exact_scale = 0.0;
        for (double s : {-1.0, 1.0}) {
            Eigen::VectorXd L = assemble_interface_load(mesh, ms.partition, 0, ms.data, dofs, s,
                                                        LineGeometry::Arc);
            SparseSystem sys;
            sys.K = K;
            sys.b = L;
            DiscreteField u = solve_dirichlet(sys, dofs, mesh, 1e-10);
            ErrorReport err = error_vs_exact(u, ms);
            FieldNorms nn = norms(u, ms.partition);
            exact_scale = std::max(exact_scale, nn.h1);
            if (err.h1 < best_err) {
                best_err = err.h1;
                best_sigma = s;
            }
        }
        if (best_sigma != -1.0 || best_err > 0.3 * exact_scale)
            throw Error("interface-sign self-test failed: assembly conventions inconsistent");
        sigma = best_sigma;
    });
    return sigma;
}

std::vector<double> compatibility_constant(const DomainPartition& partition,
                                           const CoefficientField& coeff, int curve,
                                           NormalOrientation orientation) {
    if (curve < 0 || curve >= partition.num_inclusions())
        throw UnknownInterfaceError("compatibility_constant: no such interface");
    const int n = coeff.n();
    std::vector<double> c(n, 0.0);
    if (!coeff.interface_is_zero(curve)) {
        std::vector<double> g(n);
        for (const auto& node : boundary_quadrature(partition.inclusion(curve), 1024)) {
            coeff.eval_interface(curve, node.point, node.param, g.data());
            for (int i = 0; i < n; ++i) c[i] += node.weight * g[i];
        }
    }
    double s = orientation == NormalOrientation::Outward ? 1.0 : -1.0;
    double area = partition.subdomain_area(curve + 1);
    for (int i = 0; i < n; ++i) c[i] = s * c[i] / area;
    return c;
}

AuxiliarySolution solve_inclusion_neumann(const DomainPartition& partition,
                                          const CoefficientField& coeff, const TriMesh& mesh,
                                          int curve, NormalOrientation orientation,
                                          const SolveOptions& opts) {
    if (curve < 0 || curve >= partition.num_inclusions())
        throw UnknownInterfaceError("solve_inclusion_neumann: no such interface");
    const int n = coeff.n();
    const int tag = curve + 1;

    AuxiliarySolution aux;
    aux.curve = curve;
    aux.submesh = std::make_shared<SubMesh>(extract_submesh(mesh, tag));
    if (aux.submesh->mesh.num_triangles() == 0)
        throw ValidationError("solve_inclusion_neumann: mesh not fitted to the subdomain");

    DofMap dofs(aux.submesh->mesh, opts.basis, n);
    // The auxiliary operator is the Laplacian regardless of A.
    CoefficientField laplace(n, partition.num_subdomains(), 0);
    auto K = assemble_stiffness(aux.submesh->mesh, laplace, dofs, opts.quad_degree, opts.par);
    double s = orientation == NormalOrientation::Outward ? 1.0 : -1.0;
    Eigen::VectorXd L = assemble_interface_load(aux.submesh->mesh, partition, curve, coeff, dofs,
                                                s, LineGeometry::Chord);
    Eigen::VectorXd m = assemble_mass_vector(aux.submesh->mesh, dofs, opts.quad_degree);

    aux.c = compatibility_constant(partition, coeff, curve, orientation);
    aux.c_discrete.assign(n, 0.0);
    Eigen::VectorXd b = L;
    for (int c = 0; c < n; ++c) {
        double sumL = 0.0, summ = 0.0;
        for (int sd = 0; sd < dofs.scalar_count(); ++sd) {
            sumL += L[sd * n + c];
            summ += m[sd * n + c];
        }
        // Rebalance against the discrete geometry so the Neumann system is
        // compatible to machine precision; the analytic constant is the
        // reported one.
        double cd = summ != 0.0 ? sumL / summ : 0.0;
        aux.c_discrete[c] = cd;
        for (int sd = 0; sd < dofs.scalar_count(); ++sd) b[sd * n + c] -= cd * m[sd * n + c];
        double scale =
            std::abs(aux.c[c]) + interface_data_l2(partition, coeff, curve) /
                                     partition.subdomain_area(tag);
        if (std::abs(cd - aux.c[c]) > 0.1 * scale + 1e-10)
            throw IncompatibleDataError(
                "solve_inclusion_neumann: discrete and analytic compatibility constants "
                "disagree (orientation or normalization mismatch)");
    }

    SparseSystem sys;
    sys.K = std::move(K);
    sys.b = std::move(b);
    sys.constraint = std::move(m);
    aux.w = solve_mean_zero(sys, dofs, aux.submesh->mesh, opts.tol_lin, 1e-10, opts.max_iter,
                            &aux.linear);

    FieldNorms nn = norms(aux.w, partition);
    aux.w_h1 = nn.h1;
    aux.g_l2 = interface_data_l2(partition, coeff, curve);
    aux.energy_ratio = aux.g_l2 > 0 ? aux.w_h1 / aux.g_l2 : 0.0;
    return aux;
}

void ReducedData::eval_flux_tilde(const CoefficientField& coeff, int elem, int tag,
                                  const Vec2& x, double* out) const {
    const int n = coeff.n();
    coeff.eval_flux(tag, x, out);
    if (tag - 1 < static_cast<int>(aux.size())) {
        const AuxiliarySolution& a = aux[tag - 1];
        int sub = a.submesh->parent_elem_to_sub[elem];
        if (sub >= 0)
            for (int c = 0; c < n; ++c) {
                Vec2 g = a.w.gradient_at(sub, x, c);
                out[0 * n + c] -= g.x();
                out[1 * n + c] -= g.y();
            }
    }
}

void ReducedData::eval_source_tilde(const CoefficientField& coeff, int tag, const Vec2& x,
                                    double* out) const {
    const int n = coeff.n();
    coeff.eval_source(tag, x, out);
    for (int c = 0; c < n; ++c) out[c] += source_shift[(tag - 1) * n + c];
}

ReducedData build_reduced_data(const TransmissionProblem& problem, const TriMesh& mesh,
                               std::vector<AuxiliarySolution> aux) {
    (void)mesh;
    const int n = problem.coeff.n();
    const int m = problem.partition.num_subdomains();
    if (static_cast<int>(aux.size()) != problem.partition.num_inclusions())
        throw MissingAuxiliaryError("build_reduced_data: one auxiliary solve per inclusion");
    for (int j = 0; j < static_cast<int>(aux.size()); ++j)
        if (aux[j].curve != j)
            throw MissingAuxiliaryError("build_reduced_data: auxiliary solves out of order");
    ReducedData red;
    red.source_shift.assign(static_cast<std::size_t>(m) * n, 0.0);
    for (int j = 0; j < static_cast<int>(aux.size()); ++j)
        for (int c = 0; c < n; ++c) red.source_shift[j * n + c] = aux[j].c[c];
    red.aux = std::move(aux);
    return red;
}

SolveReport solve_direct(const TransmissionProblem& problem, const TriMesh& mesh,
                         const SolveOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    problem.validate(opts.check_ellipticity);
    const int n = problem.coeff.n();

    SolveReport rep;
    rep.path = "direct";
    rep.problem_hash = problem_fingerprint(problem, opts, "direct");
    rep.sigma = pinned_interface_sign();

    DofMap dofs(mesh, opts.basis, n);
    auto K = assemble_stiffness(mesh, problem.coeff, dofs, opts.quad_degree, opts.par);
    Eigen::VectorXd rhs = assemble_volume_load(mesh, problem.coeff, dofs, opts.quad_degree,
                                               opts.par);
    for (int j = 0; j < problem.partition.num_inclusions(); ++j) {
        if (problem.coeff.interface_is_zero(j)) continue;
        rhs += assemble_interface_load(mesh, problem.partition, j, problem.coeff, dofs,
                                       rep.sigma, LineGeometry::Arc);
    }
    rep.assemble_seconds = seconds_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    SparseSystem sys;
    sys.K = std::move(K);
    sys.b = std::move(rhs);
    sys.asymmetry = matrix_asymmetry(sys.K);
    sys.symmetric = sys.asymmetry <= 1e-12;
    rep.u = solve_dirichlet(sys, dofs, mesh, opts.tol_lin, opts.max_iter, &rep.linear);
    rep.solve_seconds = seconds_since(t1);

    for (int j = 0; j < problem.partition.num_inclusions(); ++j)
        rep.c.push_back(compatibility_constant(problem.partition, problem.coeff, j,
                                               NormalOrientation::Inward));
    fill_common_report(rep, problem, mesh, opts);
    rep.total_seconds = seconds_since(t0);
    return rep;
}

SolveReport solve_by_reduction(const TransmissionProblem& problem, const TriMesh& mesh,
                               const SolveOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    problem.validate(opts.check_ellipticity);
    const int n = problem.coeff.n();

    SolveReport rep;
    rep.path = "reduction";
    rep.problem_hash = problem_fingerprint(problem, opts, "reduction");
    rep.sigma = pinned_interface_sign();

    // Auxiliary conormal solves take the jump data against the inward normal.
    std::vector<AuxiliarySolution> aux;
    for (int j = 0; j < problem.partition.num_inclusions(); ++j)
        aux.push_back(solve_inclusion_neumann(problem.partition, problem.coeff, mesh, j,
                                              NormalOrientation::Inward, opts));
    ReducedData red = build_reduced_data(problem, mesh, std::move(aux));

    DofMap dofs(mesh, opts.basis, n);
    auto K = assemble_stiffness(mesh, problem.coeff, dofs, opts.quad_degree, opts.par);
    FluxShiftFn shift = [&](int elem, const Vec2& x, double* out) -> bool {
        int tag = mesh.triangles[elem].tag;
        if (tag - 1 >= static_cast<int>(red.aux.size())) return false;
        const AuxiliarySolution& a = red.aux[tag - 1];
        int sub = a.submesh->parent_elem_to_sub[elem];
        if (sub < 0) return false;
        for (int c = 0; c < n; ++c) {
            Vec2 g = a.w.gradient_at(sub, x, c);
            out[0 * n + c] = g.x();
            out[1 * n + c] = g.y();
        }
        return true;
    };
    Eigen::VectorXd rhs = assemble_volume_load_shifted(mesh, problem.coeff, dofs, shift,
                                                       red.source_shift, opts.quad_degree,
                                                       opts.par);
    rep.assemble_seconds = seconds_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    SparseSystem sys;
    sys.K = std::move(K);
    sys.b = std::move(rhs);
    sys.asymmetry = matrix_asymmetry(sys.K);
    sys.symmetric = sys.asymmetry <= 1e-12;
    rep.u = solve_dirichlet(sys, dofs, mesh, opts.tol_lin, opts.max_iter, &rep.linear);
    rep.solve_seconds = seconds_since(t1);

    for (const auto& a : red.aux) {
        rep.c.push_back(a.c);
        rep.neumann_ratio.push_back(a.energy_ratio);
    }
    fill_common_report(rep, problem, mesh, opts);
    rep.total_seconds = seconds_since(t0);
    return rep;
}

SolveReport solve_multi(const TransmissionProblem& problem, const TriMesh& mesh,
                        const SolveOptions& opts) {
    if (problem.partition.num_subdomains() < 3)
        throw ValidationError("solve_multi: expected at least three subdomains");
    return solve_by_reduction(problem, mesh, opts);
}

std::string SolveReport::to_text() const {
    std::ostringstream os;
    os << "problem_hash: " << problem_hash << "\n";
    os << "path: " << path << "\n";
    os << "sigma: " << fmt_g(sigma) << "\n";
    os << "basis: " << static_cast<int>(basis) << "\n";
    os << mesh_stats.to_text();
    os << "linear_iterations: " << linear.iterations << "\n";
    os << "linear_rel_residual: " << fmt_g(linear.rel_residual) << "\n";
    os << "linear_symmetric: " << (linear.symmetric ? 1 : 0) << "\n";
    os << "linear_used_bicgstab: " << (linear.used_bicgstab ? 1 : 0) << "\n";
    os << "l2_norm: " << fmt_g(l2_norm) << "\n";
    os << "h1_norm: " << fmt_g(h1_norm) << "\n";
    os << "data_norm: " << fmt_g(data_norm) << "\n";
    os << "energy_ratio: " << fmt_g(energy_ratio) << "\n";
    for (std::size_t j = 0; j < c.size(); ++j) {
        os << "c_" << (j + 1) << ":";
        for (double v : c[j]) os << " " << fmt_g(v);
        os << "\n";
    }
    for (std::size_t j = 0; j < neumann_ratio.size(); ++j)
        os << "neumann_ratio_" << (j + 1) << ": " << fmt_g(neumann_ratio[j]) << "\n";
    os << "assemble_seconds: " << fmt_g(assemble_seconds) << "\n";
    os << "solve_seconds: " << fmt_g(solve_seconds) << "\n";
    os << "total_seconds: " << fmt_g(total_seconds) << "\n";
    os << "csv subdomain_stats\n";
    os << "subdomain,l2,h1,max_grad\n";
    for (std::size_t j = 0; j < l2_sub.size(); ++j)
        os << (j + 1) << ',' << fmt_g(l2_sub[j]) << ',' << fmt_g(h1_sub[j]) << ','
           << fmt_g(max_gradient_per_subdomain[j]) << "\n";
    os << "end\n";
    return os.str();
}

}  // namespace tfem
