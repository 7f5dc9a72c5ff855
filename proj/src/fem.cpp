#include "tfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tfem/quadrature.hpp"

namespace tfem {

namespace {

inline std::uint64_t ekey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// Reference shape functions at barycentric (l0,l1,l2); gradients returned in
// barycentric-derivative form d/dl scaled later by the lambda gradients.
void shape_values(Basis basis, double l0, double l1, double l2, double* N) {
    if (basis == Basis::P1) {
        N[0] = l0;
        N[1] = l1;
        N[2] = l2;
    } else {
        N[0] = l0 * (2 * l0 - 1);
        N[1] = l1 * (2 * l1 - 1);
        N[2] = l2 * (2 * l2 - 1);
        N[3] = 4 * l1 * l2;
        N[4] = 4 * l2 * l0;
        N[5] = 4 * l0 * l1;
    }
}

// grad N_a = sum_c dN/dl_c * grad(l_c); grad(l_c) from element geometry.
void shape_gradients(Basis basis, double l0, double l1, double l2, const Vec2 grad_l[3],
                     Vec2* gN) {
    if (basis == Basis::P1) {
        gN[0] = grad_l[0];
        gN[1] = grad_l[1];
        gN[2] = grad_l[2];
    } else {
        gN[0] = (4 * l0 - 1) * grad_l[0];
        gN[1] = (4 * l1 - 1) * grad_l[1];
        gN[2] = (4 * l2 - 1) * grad_l[2];
        gN[3] = 4.0 * (l2 * grad_l[1] + l1 * grad_l[2]);
        gN[4] = 4.0 * (l0 * grad_l[2] + l2 * grad_l[0]);
        gN[5] = 4.0 * (l1 * grad_l[0] + l0 * grad_l[1]);
    }
}

// Barycentric gradients and (signed twice-)area of an element.
double lambda_gradients(const TriMesh& mesh, int e, Vec2 grad_l[3]) {
    const auto& t = mesh.triangles[e];
    const Vec2 &a = mesh.nodes[t.v[0]], &b = mesh.nodes[t.v[1]], &c = mesh.nodes[t.v[2]];
    double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (det <= 0) throw SingularElementError("element with nonpositive Jacobian");
    grad_l[0] = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
    grad_l[1] = Vec2(c.y() - a.y(), a.x() - c.x()) / det;
    grad_l[2] = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
    return det;
}

int default_degree(Basis basis) { return basis == Basis::P1 ? 4 : 6; }

}  // namespace

DofMap::DofMap(const TriMesh& mesh, Basis basis, int ncomp)
    : mesh_(&mesh), basis_(basis), ncomp_(ncomp) {
    if (ncomp < 1) throw ValidationError("DofMap: ncomp must be >= 1");
    if (basis == Basis::P1) {
        scalar_count_ = mesh.num_nodes();
    } else {
        p2_elem_dofs_.resize(static_cast<std::size_t>(mesh.num_triangles()) * 6);
        int next = mesh.num_nodes();
        for (int e = 0; e < mesh.num_triangles(); ++e) {
            const auto& t = mesh.triangles[e];
            for (int l = 0; l < 3; ++l) p2_elem_dofs_[e * 6 + l] = t.v[l];
            const int pairs[3][2] = {{1, 2}, {2, 0}, {0, 1}};
            for (int l = 0; l < 3; ++l) {
                auto key = ekey(t.v[pairs[l][0]], t.v[pairs[l][1]]);
                auto it = edge_dof_.find(key);
                if (it == edge_dof_.end()) it = edge_dof_.emplace(key, next++).first;
                p2_elem_dofs_[e * 6 + 3 + l] = it->second;
            }
        }
        scalar_count_ = next;
        edge_dof_point_.resize(scalar_count_ - mesh.num_nodes());
        for (const auto& [key, dof] : edge_dof_) {
            int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
            edge_dof_point_[dof - mesh.num_nodes()] = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        }
    }
    for (int v = 0; v < mesh.num_nodes(); ++v)
        if (mesh.node_curve[v].curve == -1) boundary_scalar_dofs_.push_back(v);
    if (basis == Basis::P2)
        for (const auto& be : mesh.boundary_edges) {
            auto it = edge_dof_.find(ekey(be.a, be.b));
            if (it != edge_dof_.end()) boundary_scalar_dofs_.push_back(it->second);
        }
}

Vec2 DofMap::dof_point(int scalar_dof) const {
    if (scalar_dof < mesh_->num_nodes()) return mesh_->nodes[scalar_dof];
    int idx = scalar_dof - mesh_->num_nodes();
    if (idx < 0 || idx >= static_cast<int>(edge_dof_point_.size()))
        throw ValidationError("dof_point: unknown dof");
    return edge_dof_point_[idx];
}

std::vector<int> DofMap::interface_scalar_dofs(int curve) const {
    std::vector<int> out;
    for (const auto& ie : mesh_->interface_edges) {
        if (ie.curve != curve) continue;
        out.push_back(ie.a);
        if (basis_ == Basis::P2) {
            auto it = edge_dof_.find(ekey(ie.a, ie.b));
            if (it != edge_dof_.end()) out.push_back(it->second);
        }
    }
    return out;
}

std::vector<int> DofMap::edge_scalar_dofs(int a, int b) const {
    if (basis_ == Basis::P1) return {a, b};
    auto it = edge_dof_.find(ekey(a, b));
    if (it == edge_dof_.end()) throw ValidationError("edge_scalar_dofs: not a mesh edge");
    return {a, b, it->second};
}

namespace {
void barycentric(const TriMesh& mesh, int elem, const Vec2& p, double& l0, double& l1,
                 double& l2) {
    const auto& t = mesh.triangles[elem];
    const Vec2 &pa = mesh.nodes[t.v[0]], &pb = mesh.nodes[t.v[1]], &pc = mesh.nodes[t.v[2]];
    double det = (pb.x() - pa.x()) * (pc.y() - pa.y()) - (pb.y() - pa.y()) * (pc.x() - pa.x());
    l1 = ((p - pa).x() * (pc - pa).y() - (p - pa).y() * (pc - pa).x()) / det;
    l2 = ((pb - pa).x() * (p - pa).y() - (pb - pa).y() * (p - pa).x()) / det;
    l0 = 1.0 - l1 - l2;
}
}  // namespace

double DiscreteField::value_at(int elem, const Vec2& p, int comp) const {
    double l0, l1, l2;
    barycentric(*mesh, elem, p, l0, l1, l2);
    double N[6];
    shape_values(basis(), l0, l1, l2, N);
    const int nloc = dofs->local_count();
    const int n = ncomp();
    double v = 0.0;
    for (int a2 = 0; a2 < nloc; ++a2)
        v += N[a2] * values[dofs->elem_scalar_dof(elem, a2) * n + comp];
    return v;
}

Vec2 DiscreteField::gradient_at(int elem, const Vec2& p, int comp) const {
    Vec2 grad_l[3];
    lambda_gradients(*mesh, elem, grad_l);
    double l0, l1, l2;
    barycentric(*mesh, elem, p, l0, l1, l2);
    Vec2 gN[6];
    shape_gradients(basis(), l0, l1, l2, grad_l, gN);
    const int nloc = dofs->local_count();
    const int n = ncomp();
    Vec2 g = Vec2::Zero();
    for (int a = 0; a < nloc; ++a)
        g += gN[a] * values[dofs->elem_scalar_dof(elem, a) * n + comp];
    return g;
}

Vec2 DiscreteField::gradient_rep(int elem, int comp) const {
    return gradient_at(elem, mesh->centroid(elem), comp);
}

Eigen::SparseMatrix<double> assemble_stiffness(const TriMesh& mesh,
                                               const CoefficientField& coeff, const DofMap& dofs,
                                               int quad_degree, Parallelism par) {
    const int n = dofs.ncomp();
    const int nloc = dofs.local_count();
    const int block = nloc * n;
    if (quad_degree <= 0) quad_degree = default_degree(dofs.basis());
    const auto& rule = triangle_rule(quad_degree);
    const int ne = mesh.num_triangles();

    std::vector<double> local(static_cast<std::size_t>(ne) * block * block, 0.0);

    auto element_kernel = [&](int e, std::vector<double>& A_buf) {
        Vec2 grad_l[3];
        double det = lambda_gradients(mesh, e, grad_l);
        double area = 0.5 * det;
        const auto& t = mesh.triangles[e];
        double* Ke = &local[static_cast<std::size_t>(e) * block * block];
        Vec2 gN[6];
        for (const auto& qp : rule) {
            Vec2 x = qp.l0 * mesh.nodes[t.v[0]] + qp.l1 * mesh.nodes[t.v[1]] +
                     qp.l2 * mesh.nodes[t.v[2]];
            coeff.eval_tensor(t.tag, x, A_buf.data());
            shape_gradients(dofs.basis(), qp.l0, qp.l1, qp.l2, grad_l, gN);
            double w = qp.w * area;
            for (int a = 0; a < nloc; ++a)
                for (int b = 0; b < nloc; ++b)
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) {
                            double acc = 0.0;
                            for (int k = 0; k < 2; ++k)
                                for (int l = 0; l < 2; ++l)
                                    acc += A_buf[((k * 2 + l) * n + i) * n + j] * gN[b][l] *
                                           gN[a][k];
                            Ke[(a * n + i) * block + b * n + j] += w * acc;
                        }
        }
    };

    if (par == Parallelism::OpenMP) {
        std::exception_ptr err;
#pragma omp parallel
        {
            std::vector<double> A_buf(4 * n * n);
#pragma omp for schedule(static)
            for (int e = 0; e < ne; ++e) {
                try {
                    element_kernel(e, A_buf);
                } catch (...) {
#pragma omp critical(tfem_assembly_err)
                    if (!err) err = std::current_exception();
                }
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        std::vector<double> A_buf(4 * n * n);
        for (int e = 0; e < ne; ++e) element_kernel(e, A_buf);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(ne) * block * block);
    for (int e = 0; e < ne; ++e) {
        const double* Ke = &local[static_cast<std::size_t>(e) * block * block];
        for (int a = 0; a < nloc; ++a)
            for (int i = 0; i < n; ++i)
                for (int b = 0; b < nloc; ++b)
                    for (int j = 0; j < n; ++j)
                        trips.emplace_back(dofs.elem_scalar_dof(e, a) * n + i,
                                           dofs.elem_scalar_dof(e, b) * n + j,
                                           Ke[(a * n + i) * block + b * n + j]);
    }
    Eigen::SparseMatrix<double> K(dofs.total(), dofs.total());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

namespace {

Eigen::VectorXd volume_load_impl(const TriMesh& mesh, const CoefficientField& coeff,
                                 const DofMap& dofs, const FluxShiftFn* flux_shift,
                                 const std::vector<double>* source_shift, int quad_degree,
                                 Parallelism par) {
    const int n = dofs.ncomp();
    const int nloc = dofs.local_count();
    const int block = nloc * n;
    if (quad_degree <= 0) quad_degree = default_degree(dofs.basis());
    const auto& rule = triangle_rule(quad_degree);
    const int ne = mesh.num_triangles();

    std::vector<double> local(static_cast<std::size_t>(ne) * block, 0.0);

    auto element_kernel = [&](int e, std::vector<double>& Fq, std::vector<double>& fq,
                              std::vector<double>& shift) {
        Vec2 grad_l[3];
        double det = lambda_gradients(mesh, e, grad_l);
        double area = 0.5 * det;
        const auto& t = mesh.triangles[e];
        double* Le = &local[static_cast<std::size_t>(e) * block];
        double N[6];
        Vec2 gN[6];
        for (const auto& qp : rule) {
            Vec2 x = qp.l0 * mesh.nodes[t.v[0]] + qp.l1 * mesh.nodes[t.v[1]] +
                     qp.l2 * mesh.nodes[t.v[2]];
            coeff.eval_flux(t.tag, x, Fq.data());
            coeff.eval_source(t.tag, x, fq.data());
            if (flux_shift && *flux_shift) {
                if ((*flux_shift)(e, x, shift.data()))
                    for (int i = 0; i < 2 * n; ++i) Fq[i] -= shift[i];
            }
            if (source_shift && !source_shift->empty())
                for (int i = 0; i < n; ++i) fq[i] += (*source_shift)[(t.tag - 1) * n + i];
            shape_values(dofs.basis(), qp.l0, qp.l1, qp.l2, N);
            shape_gradients(dofs.basis(), qp.l0, qp.l1, qp.l2, grad_l, gN);
            double w = qp.w * area;
            for (int a = 0; a < nloc; ++a)
                for (int i = 0; i < n; ++i) {
                    double v = fq[i] * N[a];
                    for (int k = 0; k < 2; ++k) v -= Fq[k * n + i] * gN[a][k];
                    Le[a * n + i] += w * v;
                }
        }
    };

    if (par == Parallelism::OpenMP) {
        std::exception_ptr err;
#pragma omp parallel
        {
            std::vector<double> Fq(2 * n), fq(n), shift(2 * n);
#pragma omp for schedule(static)
            for (int e = 0; e < ne; ++e) {
                try {
                    element_kernel(e, Fq, fq, shift);
                } catch (...) {
#pragma omp critical(tfem_load_err)
                    if (!err) err = std::current_exception();
                }
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        std::vector<double> Fq(2 * n), fq(n), shift(2 * n);
        for (int e = 0; e < ne; ++e) element_kernel(e, Fq, fq, shift);
    }

    Eigen::VectorXd L = Eigen::VectorXd::Zero(dofs.total());
    for (int e = 0; e < ne; ++e)
        for (int a = 0; a < nloc; ++a)
            for (int i = 0; i < n; ++i)
                L[dofs.elem_scalar_dof(e, a) * n + i] +=
                    local[static_cast<std::size_t>(e) * block + a * n + i];
    return L;
}

}  // namespace

Eigen::VectorXd assemble_volume_load(const TriMesh& mesh, const CoefficientField& coeff,
                                     const DofMap& dofs, int quad_degree, Parallelism par) {
    return volume_load_impl(mesh, coeff, dofs, nullptr, nullptr, quad_degree, par);
}

Eigen::VectorXd assemble_volume_load_shifted(const TriMesh& mesh, const CoefficientField& coeff,
                                             const DofMap& dofs, const FluxShiftFn& flux_shift,
                                             const std::vector<double>& source_shift,
                                             int quad_degree, Parallelism par) {
    return volume_load_impl(mesh, coeff, dofs, &flux_shift, &source_shift, quad_degree, par);
}

Eigen::VectorXd assemble_interface_load(const TriMesh& mesh, const DomainPartition& partition,
                                        int curve, const CoefficientField& coeff,
                                        const DofMap& dofs, double sigma, LineGeometry geom,
                                        int gauss_points) {
    if (curve < 0 || curve >= partition.num_inclusions())
        throw UnknownInterfaceError("assemble_interface_load: no such interface");
    const int n = dofs.ncomp();
    const auto& rule = line_rule(gauss_points);
    const InterfaceCurve& c = partition.inclusion(curve);
    Eigen::VectorXd L = Eigen::VectorXd::Zero(dofs.total());
    std::vector<double> gv(n);

    for (const auto& ie : mesh.interface_edges) {
        if (ie.curve != curve) continue;
        double sa = c.arclength_at(mesh.node_curve[ie.a].param);
        double sb = c.arclength_at(mesh.node_curve[ie.b].param);
        double ds = sb - sa;
        if (ds > 0.5 * c.length()) ds -= c.length();
        if (ds < -0.5 * c.length()) ds += c.length();
        double chord = (mesh.nodes[ie.b] - mesh.nodes[ie.a]).norm();
        auto edofs = dofs.edge_scalar_dofs(ie.a, ie.b);
        for (const auto& qp : rule) {
            double tau = qp.x;
            double t = c.param_at_arclength(sa + tau * ds);
            Vec2 gp = c.point(t);
            coeff.eval_interface(curve, gp, t, gv.data());
            double jac = geom == LineGeometry::Arc ? std::abs(ds) : chord;
            double w = qp.w * jac * sigma;
            double Nt[3];
            if (dofs.basis() == Basis::P1) {
                Nt[0] = 1 - tau;
                Nt[1] = tau;
            } else {
                Nt[0] = (1 - tau) * (1 - 2 * tau);
                Nt[1] = tau * (2 * tau - 1);
                Nt[2] = 4 * tau * (1 - tau);
            }
            for (std::size_t a = 0; a < edofs.size(); ++a)
                for (int i = 0; i < n; ++i) L[edofs[a] * n + i] += w * Nt[a] * gv[i];
        }
    }
    return L;
}

Eigen::VectorXd assemble_mass_vector(const TriMesh& mesh, const DofMap& dofs, int quad_degree) {
    const int n = dofs.ncomp();
    const int nloc = dofs.local_count();
    if (quad_degree <= 0) quad_degree = default_degree(dofs.basis());
    const auto& rule = triangle_rule(quad_degree);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dofs.total());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        Vec2 grad_l[3];
        double det = lambda_gradients(mesh, e, grad_l);
        double area = 0.5 * det;
        double N[6];
        for (const auto& qp : rule) {
            shape_values(dofs.basis(), qp.l0, qp.l1, qp.l2, N);
            for (int a = 0; a < nloc; ++a)
                for (int i = 0; i < n; ++i)
                    m[dofs.elem_scalar_dof(e, a) * n + i] += qp.w * area * N[a];
        }
    }
    return m;
}

double matrix_asymmetry(const Eigen::SparseMatrix<double>& K) {
    Eigen::SparseMatrix<double> D = K - Eigen::SparseMatrix<double>(K.transpose());
    double num = 0.0, den = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(D, k); it; ++it)
            num = std::max(num, std::abs(it.value()));
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
            den = std::max(den, std::abs(it.value()));
    return den > 0 ? num / den : 0.0;
}

namespace {

// Jacobi-preconditioned CG with optional pinned dofs and nullspace
// projection. Residual is measured on the projected system.
Eigen::VectorXd projected_cg(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b_in,
                             const std::vector<char>& pinned,
                             const std::vector<Eigen::VectorXd>& nullspace, double tol,
                             int max_iter, SolveInfo* info) {
    const int N = static_cast<int>(b_in.size());
    auto project = [&](Eigen::VectorXd& v) {
        if (!pinned.empty())
            for (int i = 0; i < N; ++i)
                if (pinned[i]) v[i] = 0.0;
        for (const auto& z : nullspace) v -= z.dot(v) * z;
    };

    Eigen::VectorXd b = b_in;
    project(b);
    double bnorm = b.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    if (info) {
        info->iterations = 0;
        info->rel_residual = 0.0;
        info->converged = true;
    }
    if (bnorm == 0.0) return x;

    Eigen::VectorXd diag = K.diagonal();
    for (int i = 0; i < N; ++i)
        if (diag[i] <= 0) diag[i] = 1.0;

    Eigen::VectorXd r = b;
    Eigen::VectorXd z = r.cwiseQuotient(diag);
    project(z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    if (max_iter <= 0) max_iter = 10 * N;

    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd q = K * p;
        project(q);
        double pq = p.dot(q);
        if (pq <= 0) throw NoConvergenceError("cg: lost positive definiteness");
        double alpha = rz / pq;
        x += alpha * p;
        r -= alpha * q;
        double rel = r.norm() / bnorm;
        if (rel <= tol) {
            if (info) {
                info->iterations = it + 1;
                info->rel_residual = rel;
                info->converged = true;
            }
            return x;
        }
        z = r.cwiseQuotient(diag);
        project(z);
        double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    throw NoConvergenceError("cg: no convergence within iteration budget");
}

Eigen::SparseMatrix<double> masked_matrix(const Eigen::SparseMatrix<double>& K,
                                          const std::vector<char>& pinned) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(K.nonZeros());
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
            if (pinned[it.row()] || pinned[it.col()]) continue;
            trips.emplace_back(it.row(), it.col(), it.value());
        }
    for (int i = 0; i < K.rows(); ++i)
        if (pinned[i]) trips.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> M(K.rows(), K.cols());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

}  // namespace

DiscreteField solve_dirichlet(const SparseSystem& system, const DofMap& dofs,
                              const TriMesh& mesh, double tol, int max_iter, SolveInfo* info) {
    const int n = dofs.ncomp();
    std::vector<char> pinned(dofs.total(), 0);
    for (int sd : dofs.boundary_scalar_dofs())
        for (int c = 0; c < n; ++c) pinned[sd * n + c] = 1;

    SolveInfo local_info;
    SolveInfo* inf = info ? info : &local_info;
    double asym = matrix_asymmetry(system.K);
    inf->symmetric = asym <= 1e-12;
    inf->used_bicgstab = false;

    Eigen::VectorXd x;
    if (inf->symmetric) {
        x = projected_cg(system.K, system.b, pinned, {}, tol, max_iter, inf);
    } else {
        // Best-effort Krylov path for materially nonsymmetric forms.
        Eigen::SparseMatrix<double> M = masked_matrix(system.K, pinned);
        Eigen::VectorXd b = system.b;
        for (int i = 0; i < b.size(); ++i)
            if (pinned[i]) b[i] = 0.0;
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
        solver.setTolerance(tol);
        if (max_iter > 0) solver.setMaxIterations(max_iter);
        solver.compute(M);
        x = solver.solve(b);
        inf->used_bicgstab = true;
        inf->iterations = static_cast<int>(solver.iterations());
        inf->rel_residual = solver.error();
        inf->converged = solver.info() == Eigen::Success;
        if (!inf->converged) throw NoConvergenceError("bicgstab: no convergence");
    }
    for (int i = 0; i < x.size(); ++i)
        if (pinned[i]) x[i] = 0.0;

    DiscreteField f;
    f.mesh = &mesh;
    f.dofs = std::make_shared<DofMap>(dofs);
    f.values = std::move(x);
    return f;
}

DiscreteField solve_mean_zero(const SparseSystem& system, const DofMap& dofs,
                              const TriMesh& mesh, double tol, double tol_compat, int max_iter,
                              SolveInfo* info) {
    const int n = dofs.ncomp();
    const int N = dofs.total();
    if (system.constraint.size() != N)
        throw ValidationError("solve_mean_zero: missing mean-value constraint row");

    double bnorm = system.b.norm();
    std::vector<Eigen::VectorXd> nullspace;
    for (int c = 0; c < n; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
        for (int s = 0; s < dofs.scalar_count(); ++s) e[s * n + c] = 1.0;
        double comp_sum = e.dot(system.b);
        if (bnorm > 0 && std::abs(comp_sum) > tol_compat * bnorm)
            throw IncompatibleDataError(
                "solve_mean_zero: rhs incompatible with the pure Neumann operator "
                "(component sum " +
                std::to_string(comp_sum) + ")");
        nullspace.push_back(e / e.norm());
    }

    SolveInfo local_info;
    SolveInfo* inf = info ? info : &local_info;
    inf->symmetric = matrix_asymmetry(system.K) <= 1e-12;
    Eigen::VectorXd x = projected_cg(system.K, system.b, {}, nullspace, tol, max_iter, inf);

    // Exact mean-zero shift using the constraint functional.
    for (int c = 0; c < n; ++c) {
        double num = 0.0, den = 0.0;
        for (int s = 0; s < dofs.scalar_count(); ++s) {
            num += system.constraint[s * n + c] * x[s * n + c];
            den += system.constraint[s * n + c];
        }
        if (den != 0.0) {
            double shift = num / den;
            for (int s = 0; s < dofs.scalar_count(); ++s) x[s * n + c] -= shift;
        }
    }

    DiscreteField f;
    f.mesh = &mesh;
    f.dofs = std::make_shared<DofMap>(dofs);
    f.values = std::move(x);
    return f;
}

void write_matrix_triplets(const Eigen::SparseMatrix<double>& K, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_matrix_triplets: cannot open " + path);
    char buf[96];
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()),
                          static_cast<long>(it.col()), it.value());
            f << buf;
        }
}

}  // namespace tfem
