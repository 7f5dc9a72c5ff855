#pragma once

#include <functional>
#include <vector>

#include "tfem/geometry.hpp"

namespace tfem {

/// Piecewise problem data for an n-component system on a partitioned domain.
///
/// The tensor callback writes all 4*n^2 entries of A^{kl}_{ij} at a point,
/// flattened as ((k*2 + l)*n + i)*n + j with k,l spatial and i,j component
/// indices. Flux F writes 2n entries (k*n + i), sources write n entries.
/// Interface data g is a function of the curve point and its parameter
/// angle, writing n entries.
class CoefficientField {
  public:
    using TensorFn = std::function<void(const Vec2&, double*)>;
    using FluxFn = std::function<void(const Vec2&, double*)>;
    using SourceFn = std::function<void(const Vec2&, double*)>;
    using InterfaceFn = std::function<void(const Vec2&, double, double*)>;

    CoefficientField(int n, int subdomains, int interfaces);

    /// Scalar Laplacian data: A = identity, F = 0, f = 0, g = 0.
    static CoefficientField laplacian(int subdomains, int interfaces);

    int n() const { return n_; }
    int num_subdomains() const { return static_cast<int>(A_.size()); }
    int num_interfaces() const { return static_cast<int>(g_.size()); }

    /// Subdomain indices are 1-based everywhere below.
    void set_tensor(int subdomain, TensorFn fn) { A_.at(subdomain - 1) = std::move(fn); }
    /// Isotropic scalar block: A^{kl}_{ij} = delta_kl delta_ij a(x).
    void set_scalar(int subdomain, std::function<double(const Vec2&)> a);
    /// 2x2 spatial matrix for a scalar problem (n must be 1).
    void set_matrix(int subdomain, std::function<Eigen::Matrix2d(const Vec2&)> a);
    void set_flux(int subdomain, FluxFn fn) { F_.at(subdomain - 1) = std::move(fn); }
    void set_source(int subdomain, SourceFn fn) { f_.at(subdomain - 1) = std::move(fn); }
    void set_interface_data(int interface_id, InterfaceFn fn);

    void eval_tensor(int subdomain, const Vec2& p, double* out) const;
    void eval_flux(int subdomain, const Vec2& p, double* out) const;
    void eval_source(int subdomain, const Vec2& p, double* out) const;
    void eval_interface(int interface_id, const Vec2& p, double theta, double* out) const;

    bool flux_is_zero(int subdomain) const { return !F_.at(subdomain - 1); }
    bool source_is_zero(int subdomain) const { return !f_.at(subdomain - 1); }
    bool interface_is_zero(int interface_id) const;

  private:
    int n_;
    std::vector<TensorFn> A_;
    std::vector<FluxFn> F_;      // empty function = zero
    std::vector<SourceFn> f_;    // empty function = zero
    std::vector<InterfaceFn> g_;  // empty function = zero
};

/// Strong-ellipticity sampling report: min over samples of
/// A^{kl}_{ij} xi_k^i xi_l^j / |xi|^2 and max block magnitude |A^{kl}|
/// (Frobenius). Passes iff min_ratio >= kappa and max_block <= 1/kappa.
struct EllipticityReport {
    bool pass = false;
    double min_ratio = 0.0;
    double max_block = 0.0;
    int points_sampled = 0;
    int directions_per_point = 0;
};

EllipticityReport verify_ellipticity(const CoefficientField& coeff,
                                     const DomainPartition& partition, double kappa,
                                     int direction_samples, int point_samples = 100,
                                     std::uint64_t seed = 7);

}  // namespace tfem
