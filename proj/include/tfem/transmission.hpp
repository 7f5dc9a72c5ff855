#pragma once

#include <string>
#include <vector>

#include "tfem/fem.hpp"
#include "tfem/mesh.hpp"

namespace tfem {

/// Interface Neumann data can be given against the outward normal of the
/// enclosed region or against the curve's inward normal (the transmission
/// jump convention).
enum class NormalOrientation { Outward, Inward };

/// Full transmission problem: homogeneous Dirichlet outer condition,
/// prescribed conormal-flux jump g_j across every inclusion curve.
struct TransmissionProblem {
    DomainPartition partition;
    CoefficientField coeff;
    double kappa = 0.5;  // declared ellipticity constant

    /// Checks structural consistency and (optionally) sampled ellipticity.
    void validate(bool check_ellipticity = true) const;
};

struct SolveOptions {
    Basis basis = Basis::P1;
    double tol_lin = 1e-10;
    int max_iter = 0;     // <=0: 10 * dofs
    int quad_degree = 0;  // <=0: 4 (P1) / 6 (P2)
    Parallelism par = Parallelism::OpenMP;
    bool check_ellipticity = true;
    std::string label;  // extra material for the problem hash
};

/// Sign of the interface load in the direct weak form, pinned once per
/// process by solving MS-1 both ways and keeping the convergent sign.
double pinned_interface_sign();

/// Divergence-theorem compatibility constants for the inclusion Neumann
/// problem on subdomain j (0-based curve index), one per component:
///   c * |Omega_j| = s * integral_Gamma_j g,  s = +1 outward / -1 inward,
/// evaluated with true-curve quadrature.
std::vector<double> compatibility_constant(const DomainPartition& partition,
                                           const CoefficientField& coeff, int curve,
                                           NormalOrientation orientation);

/// One auxiliary solve: discrete Laplace w = c in the subdomain enclosed by
/// `curve`, conormal data g on the curve (zero on child curves), zero mean.
struct AuxiliarySolution {
    int curve = -1;
    std::shared_ptr<SubMesh> submesh;  // shared so moves keep w.mesh stable
    DiscreteField w;
    std::vector<double> c;           // analytic constants (reported)
    std::vector<double> c_discrete;  // rebalanced constants used in the rhs
    double w_h1 = 0.0;               // ||w||_H1 over the subdomain
    double g_l2 = 0.0;               // ||g||_L2 over the curve
    double energy_ratio = 0.0;       // w_h1 / g_l2 (0 when g = 0)
    SolveInfo linear;
};

AuxiliarySolution solve_inclusion_neumann(const DomainPartition& partition,
                                          const CoefficientField& coeff, const TriMesh& mesh,
                                          int curve, NormalOrientation orientation,
                                          const SolveOptions& opts = {});

/// Reduced right-hand-side data of the single global solve:
///   F_tilde = F - sum_j 1_j grad(w_j),  f_tilde = f + sum_j 1_j c_j.
struct ReducedData {
    std::vector<AuxiliarySolution> aux;           // one per inclusion, in order
    std::vector<double> source_shift;             // (subdomain-1)*n + comp -> c addend
    /// Evaluate the reduced flux / source at a point of a parent element.
    void eval_flux_tilde(const CoefficientField& coeff, int elem, int tag, const Vec2& x,
                         double* out) const;
    void eval_source_tilde(const CoefficientField& coeff, int tag, const Vec2& x,
                           double* out) const;
};

ReducedData build_reduced_data(const TransmissionProblem& problem, const TriMesh& mesh,
                               std::vector<AuxiliarySolution> aux);

/// Everything a solve produces, serializable as key:value lines plus CSV
/// blocks.
struct SolveReport {
    std::string problem_hash;
    std::string path;  // "reduction" | "direct"
    double sigma = 0.0;
    Basis basis = Basis::P1;
    DiscreteField u;
    MeshStats mesh_stats;
    std::vector<std::vector<double>> c;  // per inclusion, per component
    std::vector<double> neumann_ratio;   // per inclusion ||w||_H1/||g||_L2
    SolveInfo linear;
    double l2_norm = 0.0, h1_norm = 0.0;
    std::vector<double> l2_sub, h1_sub;
    double data_norm = 0.0;     // ||F|| + sum ||g_j|| + ||f||
    double energy_ratio = 0.0;  // h1_norm / data_norm (0 when data_norm = 0)
    std::vector<double> max_gradient_per_subdomain;
    double assemble_seconds = 0.0, solve_seconds = 0.0, total_seconds = 0.0;
    std::string to_text() const;
};

SolveReport solve_direct(const TransmissionProblem& problem, const TriMesh& mesh,
                         const SolveOptions& opts = {});
SolveReport solve_by_reduction(const TransmissionProblem& problem, const TriMesh& mesh,
                               const SolveOptions& opts = {});
/// Multi-subdomain entry point (M >= 3); same pipeline as solve_by_reduction.
SolveReport solve_multi(const TransmissionProblem& problem, const TriMesh& mesh,
                        const SolveOptions& opts = {});

}  // namespace tfem
