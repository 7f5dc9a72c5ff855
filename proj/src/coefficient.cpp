#include "tfem/coefficient.hpp"

#include <cmath>
#include <random>

namespace tfem {

CoefficientField::CoefficientField(int n, int subdomains, int interfaces) : n_(n) {
    if (n < 1) throw ValidationError("coefficient field: n must be >= 1");
    A_.resize(subdomains);
    F_.resize(subdomains);
    f_.resize(subdomains);
    g_.resize(interfaces);
    for (int j = 1; j <= subdomains; ++j) set_scalar(j, [](const Vec2&) { return 1.0; });
}

CoefficientField CoefficientField::laplacian(int subdomains, int interfaces) {
    return CoefficientField(1, subdomains, interfaces);
}

void CoefficientField::set_scalar(int subdomain, std::function<double(const Vec2&)> a) {
    const int n = n_;
    A_.at(subdomain - 1) = [a = std::move(a), n](const Vec2& p, double* out) {
        double v = a(p);
        for (int i = 0; i < 4 * n * n; ++i) out[i] = 0.0;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < n; ++i) out[((k * 2 + k) * n + i) * n + i] = v;
    };
}

void CoefficientField::set_matrix(int subdomain, std::function<Eigen::Matrix2d(const Vec2&)> a) {
    if (n_ != 1) throw ValidationError("set_matrix requires a scalar problem (n=1)");
    A_.at(subdomain - 1) = [a = std::move(a)](const Vec2& p, double* out) {
        Eigen::Matrix2d m = a(p);
        out[0] = m(0, 0);
        out[1] = m(0, 1);
        out[2] = m(1, 0);
        out[3] = m(1, 1);
    };
}

void CoefficientField::set_interface_data(int interface_id, InterfaceFn fn) {
    g_.at(interface_id) = std::move(fn);
}

void CoefficientField::eval_tensor(int subdomain, const Vec2& p, double* out) const {
    A_.at(subdomain - 1)(p, out);
}

void CoefficientField::eval_flux(int subdomain, const Vec2& p, double* out) const {
    const auto& fn = F_.at(subdomain - 1);
    if (!fn) {
        for (int i = 0; i < 2 * n_; ++i) out[i] = 0.0;
        return;
    }
    fn(p, out);
}

void CoefficientField::eval_source(int subdomain, const Vec2& p, double* out) const {
    const auto& fn = f_.at(subdomain - 1);
    if (!fn) {
        for (int i = 0; i < n_; ++i) out[i] = 0.0;
        return;
    }
    fn(p, out);
}

void CoefficientField::eval_interface(int interface_id, const Vec2& p, double theta,
                                      double* out) const {
    if (interface_id < 0 || interface_id >= num_interfaces())
        throw UnknownInterfaceError("interface index out of range");
    const auto& fn = g_.at(interface_id);
    if (!fn) {
        for (int i = 0; i < n_; ++i) out[i] = 0.0;
        return;
    }
    fn(p, theta, out);
}

bool CoefficientField::interface_is_zero(int interface_id) const {
    if (interface_id < 0 || interface_id >= num_interfaces())
        throw UnknownInterfaceError("interface index out of range");
    return !g_.at(interface_id);
}

EllipticityReport verify_ellipticity(const CoefficientField& coeff,
                                     const DomainPartition& partition, double kappa,
                                     int direction_samples, int point_samples,
                                     std::uint64_t seed) {
    if (kappa <= 0) throw ValidationError("verify_ellipticity: kappa must be positive");
    const int n = coeff.n();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vec2 lo, hi;
    if (partition.outer_is_box()) {
        lo = std::get<Box>(partition.outer()).lo;
        hi = std::get<Box>(partition.outer()).hi;
    } else {
        std::get<InterfaceCurve>(partition.outer()).bounding_box(lo, hi);
    }
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());

    // Random unit directions, reused at every sampled point.
    std::vector<std::vector<double>> xis(direction_samples, std::vector<double>(2 * n));
    for (auto& xi : xis) {
        double norm2 = 0.0;
        for (auto& v : xi) {
            v = gauss(rng);
            norm2 += v * v;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (auto& v : xi) v *= inv;
    }

    EllipticityReport rep;
    rep.min_ratio = 1e300;
    rep.directions_per_point = direction_samples;
    std::vector<double> A(4 * n * n);

    const int m = partition.num_subdomains();
    for (int j = 1; j <= m; ++j) {
        int found = 0, guard = 0;
        while (found < point_samples && guard++ < 200 * point_samples) {
            Vec2 p(ux(rng), uy(rng));
            if (!partition.inside_outer(p)) continue;
            Classification cls = partition.classify(p, 0.0);
            if (cls.subdomain != j) continue;
            ++found;
            ++rep.points_sampled;
            coeff.eval_tensor(j, p, A.data());
            for (double v : A)
                if (!std::isfinite(v)) {
                    rep.min_ratio = -1e300;
                    rep.pass = false;
                    return rep;
                }
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    double fro = 0.0;
                    for (int i = 0; i < n * n; ++i) {
                        double v = A[(k * 2 + l) * n * n + i];
                        fro += v * v;
                    }
                    rep.max_block = std::max(rep.max_block, std::sqrt(fro));
                }
            for (const auto& xi : xis) {
                double q = 0.0;  // A^{kl}_{ij} xi_k^i xi_l^j with xi[k*n+i]
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        for (int i = 0; i < n; ++i)
                            for (int jj = 0; jj < n; ++jj)
                                q += A[((k * 2 + l) * n + i) * n + jj] * xi[k * n + i] *
                                     xi[l * n + jj];
                rep.min_ratio = std::min(rep.min_ratio, q);
            }
        }
    }
    rep.pass = rep.min_ratio >= kappa - 1e-12 && rep.max_block <= 1.0 / kappa + 1e-12;
    return rep;
}

}  // namespace tfem
