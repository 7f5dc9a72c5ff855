#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tfem/fem.hpp"
#include "tfem/manufactured.hpp"

namespace tfem {

struct FieldNorms {
    double l2 = 0.0, h1 = 0.0;
    std::vector<double> l2_sub, h1_sub;  // per subdomain (1-based index - 1)
};

/// Quadrature-exact L2/H1 norms per subdomain; global^2 = sum of subdomain^2.
FieldNorms norms(const DiscreteField& u, const DomainPartition& partition);

struct ErrorReport {
    double l2 = 0.0, h1 = 0.0;
    std::vector<double> l2_sub, h1_sub;
    std::vector<double> max_grad_err_sub;  // at element centroids
};

ErrorReport error_vs_exact(const DiscreteField& u, const ManufacturedSolution& ms);

/// L2(Gamma) distance between the recovered conormal-flux jump of u (inner
/// minus outer trace against the inward normal) and the prescribed g.
double flux_jump_residual(const DiscreteField& u, const DomainPartition& partition,
                          const CoefficientField& coeff, int curve);

struct HolderEstimate {
    double alpha = 0.0, rho = 0.0;
    std::vector<double> per_subdomain;  // sampled sup of the Holder quotient
    double cross_interface = 0.0;       // same sup over pairs straddling a curve
};

/// Sampled lower bound on [grad u]_alpha per subdomain: sup over `pairs`
/// random same-subdomain pairs with |x-y| in [rho, diam/2] of
/// |G(x)-G(y)| / |x-y|^alpha, where G is the element-representative
/// gradient. The cross-interface variant samples pairs hugging each curve
/// from opposite sides at the same scale floor.
HolderEstimate holder_seminorm(const DiscreteField& u, const DomainPartition& partition,
                               double alpha, double rho, int pairs = 10000,
                               std::uint64_t seed = 42,
                               Parallelism par = Parallelism::OpenMP);

/// RMS deviation of the gradient from its average over B_r(center),
/// clipped to the domain (and to one subdomain when clip_subdomain > 0).
/// Throws EmptyRegionError when the clipped region has no area.
double mean_oscillation(const DiscreteField& u, const Vec2& center, double radius,
                        const DomainPartition& partition, int clip_subdomain = 0);

/// Same quantity for an analytic gradient field, via dense polar quadrature.
double mean_oscillation_analytic(const std::function<Vec2(const Vec2&)>& grad,
                                 const Vec2& center, double radius,
                                 const DomainPartition& partition, int clip_subdomain = 0);

struct OscillationProbe {
    Vec2 center = Vec2::Zero();
    double mu = 0.5;
    std::vector<double> radii;
    std::vector<double> phi;
};

OscillationProbe probe_oscillation(const DiscreteField& u, const DomainPartition& partition,
                                   const Vec2& center, double r0, double mu, int levels,
                                   int clip_subdomain = 0);
OscillationProbe probe_oscillation_analytic(const std::function<Vec2(const Vec2&)>& grad,
                                            const DomainPartition& partition, const Vec2& center,
                                            double r0, double mu, int levels,
                                            int clip_subdomain = 0);

struct DecayFit {
    double beta = 0.0;      // +inf sentinel when the ladder is all zero
    double constant = 0.0;  // prefactor of the fitted power law
    double residual = 0.0;  // RMS log-residual
    bool degenerate = false;
};

/// Least-squares fit of log(phi) vs log(r) over the ladder points with
/// phi > 0.
DecayFit decay_fit(const OscillationProbe& probe);

struct DiniModulus {
    std::vector<double> radii;
    std::vector<double> omega;
};

/// Best piecewise-constant (per subdomain) L2 mean-oscillation of a scalar
/// coefficient component over balls of each ladder radius: sup over the
/// given centers of the per-subdomain-mean-removed RMS on B_r(x0) on Omega.
DiniModulus dini_modulus(const std::function<double(const Vec2&)>& field,
                         const DomainPartition& partition, const std::vector<double>& radii,
                         const std::vector<Vec2>& centers);

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    int dofs = 0;
    double l2_err = 0.0, h1_err = 0.0, flux_resid = 0.0;
    double holder_in = 0.0, holder_cross = 0.0, energy_ratio = 0.0;
};

/// Observed order: least-squares slope of log(err) against log(h).
double observed_order(const std::vector<double>& h, const std::vector<double>& err);

void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows);
void write_probe_csv(const std::string& path, const OscillationProbe& probe);
void write_modulus_csv(const std::string& path, const DiniModulus& modulus);

}  // namespace tfem
