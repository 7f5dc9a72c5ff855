#include "tfem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>

#include "tfem/quadrature.hpp"

namespace tfem {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t ekey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

int norm_quad_degree(Basis b) { return b == Basis::P1 ? 4 : 6; }

}  // namespace

FieldNorms norms(const DiscreteField& u, const DomainPartition& partition) {
    const TriMesh& mesh = *u.mesh;
    const int m = partition.num_subdomains();
    const int n = u.ncomp();
    const auto& rule = triangle_rule(norm_quad_degree(u.basis()));
    FieldNorms out;
    out.l2_sub.assign(m, 0.0);
    out.h1_sub.assign(m, 0.0);
    std::vector<double> grad2(m, 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& t = mesh.triangles[e];
        double area = mesh.area(e);
        for (const auto& qp : rule) {
            Vec2 x = qp.l0 * mesh.nodes[t.v[0]] + qp.l1 * mesh.nodes[t.v[1]] +
                     qp.l2 * mesh.nodes[t.v[2]];
            double w = qp.w * area;
            for (int c = 0; c < n; ++c) {
                double v = u.value_at(e, x, c);
                Vec2 g = u.gradient_at(e, x, c);
                out.l2_sub[t.tag - 1] += w * v * v;
                grad2[t.tag - 1] += w * g.squaredNorm();
            }
        }
    }
    double l2tot = 0.0, h1tot = 0.0;
    for (int j = 0; j < m; ++j) {
        double h1sq = out.l2_sub[j] + grad2[j];
        l2tot += out.l2_sub[j];
        h1tot += h1sq;
        out.l2_sub[j] = std::sqrt(out.l2_sub[j]);
        out.h1_sub[j] = std::sqrt(h1sq);
    }
    out.l2 = std::sqrt(l2tot);
    out.h1 = std::sqrt(h1tot);
    return out;
}

ErrorReport error_vs_exact(const DiscreteField& u, const ManufacturedSolution& ms) {
    const TriMesh& mesh = *u.mesh;
    const int m = ms.partition.num_subdomains();
    const auto& rule = triangle_rule(norm_quad_degree(u.basis()));
    ErrorReport out;
    out.l2_sub.assign(m, 0.0);
    out.h1_sub.assign(m, 0.0);
    out.max_grad_err_sub.assign(m, 0.0);
    std::vector<double> grad2(m, 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        const auto& t = mesh.triangles[e];
        double area = mesh.area(e);
        for (const auto& qp : rule) {
            Vec2 x = qp.l0 * mesh.nodes[t.v[0]] + qp.l1 * mesh.nodes[t.v[1]] +
                     qp.l2 * mesh.nodes[t.v[2]];
            double w = qp.w * area;
            double dv = u.value_at(e, x, 0) - ms.exact(t.tag, x);
            Vec2 dg = u.gradient_at(e, x, 0) - ms.exact_grad(t.tag, x);
            out.l2_sub[t.tag - 1] += w * dv * dv;
            grad2[t.tag - 1] += w * dg.squaredNorm();
        }
        Vec2 cen = mesh.centroid(e);
        double gerr = (u.gradient_rep(e, 0) - ms.exact_grad(t.tag, cen)).norm();
        out.max_grad_err_sub[t.tag - 1] = std::max(out.max_grad_err_sub[t.tag - 1], gerr);
    }
    double l2tot = 0.0, h1tot = 0.0;
    for (int j = 0; j < m; ++j) {
        double h1sq = out.l2_sub[j] + grad2[j];
        l2tot += out.l2_sub[j];
        h1tot += h1sq;
        out.l2_sub[j] = std::sqrt(out.l2_sub[j]);
        out.h1_sub[j] = std::sqrt(h1sq);
    }
    out.l2 = std::sqrt(l2tot);
    out.h1 = std::sqrt(h1tot);
    return out;
}

double flux_jump_residual(const DiscreteField& u, const DomainPartition& partition,
                          const CoefficientField& coeff, int curve) {
    if (curve < 0 || curve >= partition.num_inclusions())
        throw UnknownInterfaceError("flux_jump_residual: no such interface");
    const TriMesh& mesh = *u.mesh;
    const int n = u.ncomp();
    const InterfaceCurve& c = partition.inclusion(curve);

    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
    for (int e = 0; e < mesh.num_triangles(); ++e)
        for (int k = 0; k < 3; ++k) {
            auto key = ekey(mesh.triangles[e].v[k], mesh.triangles[e].v[(k + 1) % 3]);
            auto it = edge_tris.find(key);
            if (it == edge_tris.end())
                edge_tris[key] = {e, -1};
            else
                it->second[1] = e;
        }

    const auto& rule = line_rule(4);
    std::vector<double> A(4 * n * n), g(n);
    double resid2 = 0.0;
    for (const auto& ie : mesh.interface_edges) {
        if (ie.curve != curve) continue;
        auto it = edge_tris.find(ekey(ie.a, ie.b));
        if (it == edge_tris.end() || it->second[1] == -1)
            throw MeshFailure("flux_jump_residual: interface edge lacks two triangles");
        int e_in = it->second[0], e_out = it->second[1];
        if (mesh.triangles[e_in].tag != ie.inner_tag) std::swap(e_in, e_out);
        double sa = c.arclength_at(mesh.node_curve[ie.a].param);
        double sb = c.arclength_at(mesh.node_curve[ie.b].param);
        double ds = sb - sa;
        if (ds > 0.5 * c.length()) ds -= c.length();
        if (ds < -0.5 * c.length()) ds += c.length();
        double chord = (mesh.nodes[ie.b] - mesh.nodes[ie.a]).norm();
        for (const auto& qp : rule) {
            double t = c.param_at_arclength(sa + qp.x * ds);
            Vec2 nu = c.inward_normal(t);
            Vec2 x = mesh.nodes[ie.a] + qp.x * (mesh.nodes[ie.b] - mesh.nodes[ie.a]);
            coeff.eval_interface(curve, c.point(t), t, g.data());
            double local2 = 0.0;
            std::vector<double> jump(n, 0.0);
            for (int side = 0; side < 2; ++side) {
                int e = side == 0 ? e_in : e_out;
                coeff.eval_tensor(mesh.triangles[e].tag, x, A.data());
                for (int i = 0; i < n; ++i) {
                    double flux = 0.0;
                    for (int j = 0; j < n; ++j) {
                        Vec2 gj = u.gradient_at(e, x, j);
                        for (int k = 0; k < 2; ++k)
                            for (int l = 0; l < 2; ++l)
                                flux += A[((k * 2 + l) * n + i) * n + j] * gj[l] * nu[k];
                    }
                    jump[i] += side == 0 ? flux : -flux;
                }
            }
            for (int i = 0; i < n; ++i) {
                double d = jump[i] - g[i];
                local2 += d * d;
            }
            resid2 += qp.w * chord * local2;
        }
    }
    return std::sqrt(resid2);
}

namespace {

struct PairCandidate {
    Vec2 x, y;
};

double gradient_distance(const DiscreteField& u, int ex, int ey) {
    double d2 = 0.0;
    for (int c = 0; c < u.ncomp(); ++c)
        d2 += (u.gradient_rep(ex, c) - u.gradient_rep(ey, c)).squaredNorm();
    return std::sqrt(d2);
}

}  // namespace

HolderEstimate holder_seminorm(const DiscreteField& u, const DomainPartition& partition,
                               double alpha, double rho, int pairs, std::uint64_t seed,
                               Parallelism par) {
    const TriMesh& mesh = *u.mesh;
    if (rho < 2 * mesh.h - 1e-12)
        throw ValidationError("holder_seminorm: rho must be at least 2h");
    HolderEstimate out;
    out.alpha = alpha;
    out.rho = rho;
    const int m = partition.num_subdomains();
    out.per_subdomain.assign(m, 0.0);
    PointLocator locator(mesh);
    const double dmax = 0.5 * partition.diameter();

    Vec2 lo, hi;
    if (partition.outer_is_box()) {
        lo = std::get<Box>(partition.outer()).lo;
        hi = std::get<Box>(partition.outer()).hi;
    } else {
        std::get<InterfaceCurve>(partition.outer()).bounding_box(lo, hi);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());

    // Same-subdomain sup, one subdomain at a time.
    for (int j = 1; j <= m; ++j) {
        const int attempts = 40 * pairs;
        std::vector<PairCandidate> cand(attempts);
        for (auto& pc : cand) pc = {Vec2(ux(rng), uy(rng)), Vec2(ux(rng), uy(rng))};
        std::vector<double> quot(attempts, -1.0);  // -1 = invalid

        auto eval = [&](int i) {
            const Vec2 &x = cand[i].x, &y = cand[i].y;
            double d = (x - y).norm();
            if (d < rho || d > dmax) return;
            int ex = locator.locate(x), ey = locator.locate(y);
            if (ex < 0 || ey < 0) return;
            if (mesh.triangles[ex].tag != j || mesh.triangles[ey].tag != j) return;
            quot[i] = gradient_distance(u, ex, ey) / std::pow(d, alpha);
        };
        if (par == Parallelism::OpenMP) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < attempts; ++i) eval(i);
        } else {
            for (int i = 0; i < attempts; ++i) eval(i);
        }
        int used = 0;
        double sup = 0.0;
        for (int i = 0; i < attempts && used < pairs; ++i)
            if (quot[i] >= 0) {
                sup = std::max(sup, quot[i]);
                ++used;
            }
        out.per_subdomain[j - 1] = sup;
    }

    // Cross-interface sup: pairs hugging each curve from opposite sides.
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int cidx = 0; cidx < partition.num_inclusions(); ++cidx) {
        const InterfaceCurve& c = partition.inclusion(cidx);
        int inner_tag = cidx + 1;
        int outer_tag = partition.parent_of(cidx) >= 0 ? partition.parent_of(cidx) + 1 : m;
        const int attempts = 4 * pairs;
        std::vector<PairCandidate> cand(attempts);
        for (auto& pc : cand) {
            double s1 = u01(rng) * c.length();
            double s2 = s1 + (u01(rng) - 0.5) * 4.0 * rho;
            double d1 = rho * (0.25 + 0.5 * u01(rng));
            double d2 = rho * (0.25 + 0.5 * u01(rng));
            double t1 = c.param_at_arclength(s1), t2 = c.param_at_arclength(s2);
            pc.x = c.point(t1) + d1 * c.inward_normal(t1);
            pc.y = c.point(t2) - d2 * c.inward_normal(t2);
        }
        std::vector<double> quot(attempts, -1.0);
        auto eval = [&](int i) {
            const Vec2 &x = cand[i].x, &y = cand[i].y;
            double d = (x - y).norm();
            if (d < rho || d > dmax) return;
            int ex = locator.locate(x), ey = locator.locate(y);
            if (ex < 0 || ey < 0) return;
            if (mesh.triangles[ex].tag != inner_tag || mesh.triangles[ey].tag != outer_tag)
                return;
            quot[i] = gradient_distance(u, ex, ey) / std::pow(d, alpha);
        };
        if (par == Parallelism::OpenMP) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < attempts; ++i) eval(i);
        } else {
            for (int i = 0; i < attempts; ++i) eval(i);
        }
        int used = 0;
        double sup = 0.0;
        for (int i = 0; i < attempts && used < pairs; ++i)
            if (quot[i] >= 0) {
                sup = std::max(sup, quot[i]);
                ++used;
            }
        out.cross_interface = std::max(out.cross_interface, sup);
    }
    return out;
}

namespace {

// Accumulator for the clipped-ball gradient statistics.
struct BallAccum {
    double w = 0.0;
    std::vector<double> gsum;  // 2 per component
    double g2 = 0.0;
    void init(int n) { gsum.assign(2 * n, 0.0); }
    void add(double weight, const DiscreteField& u, int elem, const Vec2& at) {
        w += weight;
        for (int c = 0; c < u.ncomp(); ++c) {
            Vec2 g = u.basis() == Basis::P1 ? u.gradient_rep(elem, c)
                                            : u.gradient_at(elem, at, c);
            gsum[2 * c] += weight * g.x();
            gsum[2 * c + 1] += weight * g.y();
            g2 += weight * g.squaredNorm();
        }
    }
    double phi() const {
        if (w <= 0) throw EmptyRegionError("mean_oscillation: empty clipped region");
        double mean2 = 0.0;
        for (double v : gsum) mean2 += (v / w) * (v / w);
        double var = g2 / w - mean2;
        return std::sqrt(std::max(var, 0.0));
    }
};

void accumulate_clipped(const DiscreteField& u, int elem, const Vec2 tri[3], const Vec2& x0,
                        double r, int depth, BallAccum& acc) {
    double area =
        0.5 * std::abs((tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() -
                       (tri[1] - tri[0]).y() * (tri[2] - tri[0]).x());
    if (area <= 0) return;
    bool in0 = (tri[0] - x0).norm() <= r;
    bool in1 = (tri[1] - x0).norm() <= r;
    bool in2 = (tri[2] - x0).norm() <= r;
    if (in0 && in1 && in2) {
        // Fully inside the ball: 3-midpoint rule (exact for P2 gradients).
        for (int k = 0; k < 3; ++k) {
            Vec2 mid = 0.5 * (tri[k] + tri[(k + 1) % 3]);
            acc.add(area / 3.0, u, elem, mid);
        }
        return;
    }
    // Quick reject: ball cannot reach the triangle's bounding box.
    Vec2 lo = tri[0].cwiseMin(tri[1]).cwiseMin(tri[2]);
    Vec2 hi = tri[0].cwiseMax(tri[1]).cwiseMax(tri[2]);
    double dx = std::max({lo.x() - x0.x(), x0.x() - hi.x(), 0.0});
    double dy = std::max({lo.y() - x0.y(), x0.y() - hi.y(), 0.0});
    if (dx * dx + dy * dy > r * r) return;
    if (depth == 0) {
        Vec2 cen = (tri[0] + tri[1] + tri[2]) / 3.0;
        if ((cen - x0).norm() <= r) acc.add(area, u, elem, cen);
        return;
    }
    Vec2 m01 = 0.5 * (tri[0] + tri[1]);
    Vec2 m12 = 0.5 * (tri[1] + tri[2]);
    Vec2 m20 = 0.5 * (tri[2] + tri[0]);
    Vec2 c1[3] = {tri[0], m01, m20};
    Vec2 c2[3] = {tri[1], m12, m01};
    Vec2 c3[3] = {tri[2], m20, m12};
    Vec2 c4[3] = {m01, m12, m20};
    accumulate_clipped(u, elem, c1, x0, r, depth - 1, acc);
    accumulate_clipped(u, elem, c2, x0, r, depth - 1, acc);
    accumulate_clipped(u, elem, c3, x0, r, depth - 1, acc);
    accumulate_clipped(u, elem, c4, x0, r, depth - 1, acc);
}

}  // namespace

double mean_oscillation(const DiscreteField& u, const Vec2& center, double radius,
                        const DomainPartition& partition, int clip_subdomain) {
    (void)partition;
    const TriMesh& mesh = *u.mesh;
    BallAccum acc;
    acc.init(u.ncomp());
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        if (clip_subdomain > 0 && mesh.triangles[e].tag != clip_subdomain) continue;
        Vec2 tri[3] = {mesh.nodes[mesh.triangles[e].v[0]], mesh.nodes[mesh.triangles[e].v[1]],
                       mesh.nodes[mesh.triangles[e].v[2]]};
        accumulate_clipped(u, e, tri, center, radius, 5, acc);
    }
    return acc.phi();
}

double mean_oscillation_analytic(const std::function<Vec2(const Vec2&)>& grad,
                                 const Vec2& center, double radius,
                                 const DomainPartition& partition, int clip_subdomain) {
    const int nr = 64, na = 128;
    double w = 0.0, gx = 0.0, gy = 0.0, g2 = 0.0;
    const double cell = radius * radius * 3.14159265358979323846 / (nr * na);
    for (int i = 0; i < nr; ++i) {
        double r = radius * std::sqrt((i + 0.5) / nr);
        for (int j = 0; j < na; ++j) {
            double th = (j + 0.5) * kTwoPi / na;
            Vec2 p = center + r * Vec2(std::cos(th), std::sin(th));
            if (!partition.inside_outer(p)) continue;
            if (clip_subdomain > 0 &&
                partition.classify(p, 0.0).subdomain != clip_subdomain)
                continue;
            Vec2 g = grad(p);
            w += cell;
            gx += cell * g.x();
            gy += cell * g.y();
            g2 += cell * g.squaredNorm();
        }
    }
    if (w <= 0) throw EmptyRegionError("mean_oscillation_analytic: empty clipped region");
    double var = g2 / w - (gx / w) * (gx / w) - (gy / w) * (gy / w);
    return std::sqrt(std::max(var, 0.0));
}

OscillationProbe probe_oscillation(const DiscreteField& u, const DomainPartition& partition,
                                   const Vec2& center, double r0, double mu, int levels,
                                   int clip_subdomain) {
    OscillationProbe probe;
    probe.center = center;
    probe.mu = mu;
    double r = r0;
    for (int k = 0; k < levels; ++k, r *= mu) {
        probe.radii.push_back(r);
        probe.phi.push_back(mean_oscillation(u, center, r, partition, clip_subdomain));
    }
    return probe;
}

OscillationProbe probe_oscillation_analytic(const std::function<Vec2(const Vec2&)>& grad,
                                            const DomainPartition& partition,
                                            const Vec2& center, double r0, double mu,
                                            int levels, int clip_subdomain) {
    OscillationProbe probe;
    probe.center = center;
    probe.mu = mu;
    double r = r0;
    for (int k = 0; k < levels; ++k, r *= mu) {
        probe.radii.push_back(r);
        probe.phi.push_back(
            mean_oscillation_analytic(grad, center, r, partition, clip_subdomain));
    }
    return probe;
}

DecayFit decay_fit(const OscillationProbe& probe) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < probe.radii.size(); ++i)
        if (probe.phi[i] > 0) {
            lx.push_back(std::log(probe.radii[i]));
            ly.push_back(std::log(probe.phi[i]));
        }
    DecayFit fit;
    if (lx.empty()) {
        fit.degenerate = true;
        fit.beta = std::numeric_limits<double>::infinity();
        return fit;
    }
    if (lx.size() == 1) {
        fit.beta = 0.0;
        fit.constant = std::exp(ly[0]);
        return fit;
    }
    double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    fit.beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - fit.beta * sx) / n;
    fit.constant = std::exp(intercept);
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double e = ly[i] - (intercept + fit.beta * lx[i]);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

DiniModulus dini_modulus(const std::function<double(const Vec2&)>& field,
                         const DomainPartition& partition, const std::vector<double>& radii,
                         const std::vector<Vec2>& centers) {
    DiniModulus mod;
    mod.radii = radii;
    const int m = partition.num_subdomains();
    const int nr = 48, na = 96;
    for (double r : radii) {
        double sup = 0.0;
        for (const Vec2& x0 : centers) {
            std::vector<double> w(m + 1, 0.0), sv(m + 1, 0.0), sv2(m + 1, 0.0);
            const double cell = 1.0;  // uniform weights suffice for means
            for (int i = 0; i < nr; ++i) {
                double rr = r * std::sqrt((i + 0.5) / nr);
                for (int j = 0; j < na; ++j) {
                    double th = (j + 0.5) * kTwoPi / na;
                    Vec2 p = x0 + rr * Vec2(std::cos(th), std::sin(th));
                    if (!partition.inside_outer(p)) continue;
                    int tag = partition.classify(p, 0.0).subdomain;
                    double v = field(p);
                    w[tag] += cell;
                    sv[tag] += cell * v;
                    sv2[tag] += cell * v * v;
                }
            }
            double wot = 0.0, err2 = 0.0;
            for (int tag = 1; tag <= m; ++tag) {
                if (w[tag] <= 0) continue;
                wot += w[tag];
                err2 += sv2[tag] - sv[tag] * sv[tag] / w[tag];
            }
            if (wot <= 0) continue;  // ball misses the domain entirely
            sup = std::max(sup, std::sqrt(std::max(err2 / wot, 0.0)));
        }
        mod.omega.push_back(sup);
    }
    return mod;
}

double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < h.size(); ++i)
        if (err[i] > 0 && h[i] > 0) {
            lx.push_back(std::log(h[i]));
            ly.push_back(std::log(err[i]));
        }
    if (lx.size() < 2) return 0.0;
    double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {
std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void write_convergence_csv(const std::string& path, const std::vector<ConvergenceRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("write_convergence_csv: cannot open " + path);
    f << "level,h,dofs,l2_err,h1_err,flux_resid,holder_in,holder_cross,energy_ratio\n";
    for (const auto& r : rows)
        f << r.level << ',' << fmt_g(r.h) << ',' << r.dofs << ',' << fmt_g(r.l2_err) << ','
          << fmt_g(r.h1_err) << ',' << fmt_g(r.flux_resid) << ',' << fmt_g(r.holder_in) << ','
          << fmt_g(r.holder_cross) << ',' << fmt_g(r.energy_ratio) << '\n';
    if (!f) throw IoError("write_convergence_csv: write failed");
}

void write_probe_csv(const std::string& path, const OscillationProbe& probe) {
    std::ofstream f(path);
    if (!f) throw IoError("write_probe_csv: cannot open " + path);
    f << "r,phi\n";
    for (std::size_t i = 0; i < probe.radii.size(); ++i)
        f << fmt_g(probe.radii[i]) << ',' << fmt_g(probe.phi[i]) << '\n';
    if (!f) throw IoError("write_probe_csv: write failed");
}

void write_modulus_csv(const std::string& path, const DiniModulus& modulus) {
    std::ofstream f(path);
    if (!f) throw IoError("write_modulus_csv: cannot open " + path);
    f << "r,omega\n";
    for (std::size_t i = 0; i < modulus.radii.size(); ++i)
        f << fmt_g(modulus.radii[i]) << ',' << fmt_g(modulus.omega[i]) << '\n';
    if (!f) throw IoError("write_modulus_csv: write failed");
}

}  // namespace tfem
