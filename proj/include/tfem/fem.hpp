#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "tfem/coefficient.hpp"
#include "tfem/mesh.hpp"

namespace tfem {

enum class Basis { P1 = 1, P2 = 2 };

/// Assembly kernels come in a serial reference flavor and an OpenMP flavor.
/// Both produce bit-identical results (parallel workers fill per-element
/// slots; reduction order is fixed), so tests can compare them directly.
enum class Parallelism { Serial, OpenMP };

/// Scalar degrees of freedom: mesh nodes (P1) or nodes plus edge midpoints
/// (P2). Vector-valued problems interleave components: dof = scalar*n + c.
class DofMap {
  public:
    DofMap(const TriMesh& mesh, Basis basis, int ncomp);

    Basis basis() const { return basis_; }
    int ncomp() const { return ncomp_; }
    int scalar_count() const { return scalar_count_; }
    int total() const { return scalar_count_ * ncomp_; }
    int local_count() const { return basis_ == Basis::P1 ? 3 : 6; }

    /// Scalar dof of local basis function `l` on element `e`.
    int elem_scalar_dof(int e, int l) const {
        return basis_ == Basis::P1 ? mesh_->triangles[e].v[l] : p2_elem_dofs_[e * 6 + l];
    }
    /// Coordinates of a scalar dof (node or edge midpoint).
    Vec2 dof_point(int scalar_dof) const;

    /// Scalar dofs pinned by the homogeneous Dirichlet condition on the
    /// outer boundary.
    const std::vector<int>& boundary_scalar_dofs() const { return boundary_scalar_dofs_; }
    /// Scalar dofs lying on a given interface curve (nodes, plus edge
    /// midpoints for P2), in polyline order.
    std::vector<int> interface_scalar_dofs(int curve) const;
    /// Scalar dofs of the two/three basis functions supported on an
    /// interface edge (endpoint nodes, plus the P2 edge dof).
    std::vector<int> edge_scalar_dofs(int a, int b) const;

    const TriMesh& mesh() const { return *mesh_; }

  private:
    const TriMesh* mesh_;
    Basis basis_;
    int ncomp_;
    int scalar_count_;
    std::vector<int> p2_elem_dofs_;                    // 6 per element
    std::unordered_map<std::uint64_t, int> edge_dof_;  // edge key -> scalar dof (P2)
    std::vector<Vec2> edge_dof_point_;                 // midpoint per P2 edge dof
    std::vector<int> boundary_scalar_dofs_;
};

/// Nodal coefficient vector over a mesh-bound basis.
struct DiscreteField {
    const TriMesh* mesh = nullptr;
    std::shared_ptr<const DofMap> dofs;
    Eigen::VectorXd values;

    int ncomp() const { return dofs->ncomp(); }
    Basis basis() const { return dofs->basis(); }

    double value_at(int elem, const Vec2& p, int comp) const;
    Vec2 gradient_at(int elem, const Vec2& p, int comp) const;
    /// Element-representative gradient (evaluated at the centroid; exact for
    /// the piecewise-constant P1 gradient).
    Vec2 gradient_rep(int elem, int comp) const;
    double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Symmetric sparse system with an optional single mean-value constraint row.
struct SparseSystem {
    Eigen::SparseMatrix<double> K;
    Eigen::VectorXd b;
    Eigen::VectorXd constraint;  // empty when unconstrained
    bool symmetric = true;
    double asymmetry = 0.0;  // max |K - K^T| relative to max |K|
};

struct SolveInfo {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    bool symmetric = true;
    bool used_bicgstab = false;
};

/// Stiffness matrix of the form integral A^{kl} D_l u^j D_k phi^i over all
/// elements. Quadrature degree defaults to 4 (P1) / 6 (P2) when <= 0.
/// Throws SingularElementError on a nonpositive element Jacobian.
Eigen::SparseMatrix<double> assemble_stiffness(const TriMesh& mesh,
                                               const CoefficientField& coeff,
                                               const DofMap& dofs, int quad_degree = 0,
                                               Parallelism par = Parallelism::OpenMP);

/// Volume load functional  -int F . grad(phi) + int f phi.
Eigen::VectorXd assemble_volume_load(const TriMesh& mesh, const CoefficientField& coeff,
                                     const DofMap& dofs, int quad_degree = 0,
                                     Parallelism par = Parallelism::OpenMP);

/// Volume load with an extra per-element flux shift (used for the reduced
/// data F - sum 1_j grad(w_j)): shift(elem, point, out[2n]) is subtracted
/// from F wherever defined.
using FluxShiftFn = std::function<bool(int elem, const Vec2&, double*)>;
Eigen::VectorXd assemble_volume_load_shifted(const TriMesh& mesh, const CoefficientField& coeff,
                                             const DofMap& dofs, const FluxShiftFn& flux_shift,
                                             const std::vector<double>& source_shift_per_subdomain,
                                             int quad_degree = 0,
                                             Parallelism par = Parallelism::OpenMP);

/// Line quadrature geometry for interface loads: integrate over the straight
/// chords of the interface polyline, or over the true curve arcs (pulling the
/// trace back by arclength fraction).
enum class LineGeometry { Chord, Arc };

/// Interface load  sigma * int_Gamma g phi  restricted to one curve.
/// g is evaluated at curve points (their parameter passed as theta).
Eigen::VectorXd assemble_interface_load(const TriMesh& mesh, const DomainPartition& partition,
                                        int curve, const CoefficientField& coeff,
                                        const DofMap& dofs, double sigma,
                                        LineGeometry geom = LineGeometry::Chord,
                                        int gauss_points = 4);

/// Vector of basis-function integrals (the mean-value functional).
Eigen::VectorXd assemble_mass_vector(const TriMesh& mesh, const DofMap& dofs,
                                     int quad_degree = 0);

/// Max |K - K^T| over max |K| (triplet-level check).
double matrix_asymmetry(const Eigen::SparseMatrix<double>& K);

/// Jacobi-preconditioned CG on the subspace with the listed scalar dofs
/// pinned to zero (all components). Falls back to BiCGSTAB when the matrix
/// is materially asymmetric. rel tol on ||Ku-b||/||b||; max_iter <= 0 means
/// 10 * dofs. Throws NoConvergenceError.
DiscreteField solve_dirichlet(const SparseSystem& system, const DofMap& dofs,
                              const TriMesh& mesh, double tol = 1e-10, int max_iter = 0,
                              SolveInfo* info = nullptr);

/// Pure-Neumann solve with the per-component constant nullspace projected
/// out and the mean-value constraint applied exactly afterwards. Requires a
/// compatible rhs: |1^T b| <= tol_compat * ||b|| per component.
DiscreteField solve_mean_zero(const SparseSystem& system, const DofMap& dofs,
                              const TriMesh& mesh, double tol = 1e-10,
                              double tol_compat = 1e-10, int max_iter = 0,
                              SolveInfo* info = nullptr);

/// Triplet text dump ("row col value" per line) for debugging.
void write_matrix_triplets(const Eigen::SparseMatrix<double>& K, const std::string& path);

}  // namespace tfem
