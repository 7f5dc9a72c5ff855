#include "tfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "delaunay.hpp"

namespace tfem {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline std::uint64_t ekey(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double tri_min_angle_deg(const Vec2& a, const Vec2& b, const Vec2& c) {
    double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
    auto angle = [](double opp, double s1, double s2) {
        double cosv = (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2);
        return std::acos(std::clamp(cosv, -1.0, 1.0));
    };
    double amin = std::min({angle(la, lb, lc), angle(lb, la, lc), angle(lc, la, lb)});
    return amin * 180.0 / kPi;
}

// Uniform bins over polyline segments for clearance queries.
class SegmentGrid {
  public:
    SegmentGrid(const std::vector<Vec2>& pts, const std::vector<std::array<int, 2>>& segs,
                double cell)
        : pts_(pts), segs_(segs), cell_(cell) {
        lo_ = Vec2(1e300, 1e300);
        Vec2 hi(-1e300, -1e300);
        for (const auto& p : pts) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        lo_ -= Vec2(cell_, cell_);
        hi += Vec2(cell_, cell_);
        nx_ = std::max(1, static_cast<int>((hi.x() - lo_.x()) / cell_) + 1);
        ny_ = std::max(1, static_cast<int>((hi.y() - lo_.y()) / cell_) + 1);
        bins_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (std::size_t s = 0; s < segs_.size(); ++s) {
            const Vec2& a = pts_[segs_[s][0]];
            const Vec2& b = pts_[segs_[s][1]];
            int i0 = cx(std::min(a.x(), b.x())), i1 = cx(std::max(a.x(), b.x()));
            int j0 = cy(std::min(a.y(), b.y())), j1 = cy(std::max(a.y(), b.y()));
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) bins_[j * nx_ + i].push_back(static_cast<int>(s));
        }
    }

    double distance(const Vec2& p, double cutoff) const {
        int i0 = std::max(0, cx(p.x() - cutoff)), i1 = std::min(nx_ - 1, cx(p.x() + cutoff));
        int j0 = std::max(0, cy(p.y() - cutoff)), j1 = std::min(ny_ - 1, cy(p.y() + cutoff));
        double best = 1e300;
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                for (int s : bins_[j * nx_ + i]) {
                    const Vec2& a = pts_[segs_[s][0]];
                    const Vec2& b = pts_[segs_[s][1]];
                    Vec2 d = b - a;
                    double t = d.squaredNorm() > 0 ? (p - a).dot(d) / d.squaredNorm() : 0.0;
                    t = std::clamp(t, 0.0, 1.0);
                    best = std::min(best, (p - (a + t * d)).norm());
                }
        return best;
    }

  private:
    int cx(double x) const {
        return std::clamp(static_cast<int>((x - lo_.x()) / cell_), 0, nx_ - 1);
    }
    int cy(double y) const {
        return std::clamp(static_cast<int>((y - lo_.y()) / cell_), 0, ny_ - 1);
    }
    std::vector<Vec2> pts_;
    std::vector<std::array<int, 2>> segs_;
    double cell_;
    Vec2 lo_;
    int nx_, ny_;
    std::vector<std::vector<int>> bins_;
};

struct PolyPoint {
    Vec2 p;
    int curve;  // -1 outer, >=0 inclusion
    double param;
};

// Arclength-uniform polygonalization of a curve at spacing <= h.
std::vector<PolyPoint> polygonalize(const InterfaceCurve& c, int curve_id, double h) {
    int n = std::max(8, static_cast<int>(std::ceil(c.length() / h)));
    std::vector<PolyPoint> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        double s = c.length() * k / n;
        double t = c.param_at_arclength(s);
        out.push_back({c.point(t), curve_id, t});
    }
    return out;
}

std::vector<PolyPoint> polygonalize_box(const Box& b, double h) {
    std::vector<PolyPoint> out;
    Vec2 corners[4] = {b.lo, Vec2(b.hi.x(), b.lo.y()), b.hi, Vec2(b.lo.x(), b.hi.y())};
    for (int side = 0; side < 4; ++side) {
        Vec2 a = corners[side], c = corners[(side + 1) % 4];
        int n = std::max(1, static_cast<int>(std::ceil((c - a).norm() / h)));
        for (int k = 0; k < n; ++k)
            out.push_back({a + (c - a) * (static_cast<double>(k) / n), -1, 0.0});
    }
    return out;
}

TriMesh structured_box_mesh(const Box& b, double h_target) {
    TriMesh m;
    double w = b.hi.x() - b.lo.x(), ht = b.hi.y() - b.lo.y();
    int nx = std::max(1, static_cast<int>(std::round(w / h_target)));
    int ny = std::max(1, static_cast<int>(std::round(ht / h_target)));
    double dx = w / nx, dy = ht / ny;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            m.nodes.emplace_back(b.lo.x() + i * dx, b.lo.y() + j * dy);
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.triangles.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, 1});
            m.triangles.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, 1});
        }
    for (int i = 0; i < nx; ++i) m.boundary_edges.push_back({id(i, 0), id(i + 1, 0)});
    for (int j = 0; j < ny; ++j) m.boundary_edges.push_back({id(nx, j), id(nx, j + 1)});
    for (int i = nx; i > 0; --i) m.boundary_edges.push_back({id(i, ny), id(i - 1, ny)});
    for (int j = ny; j > 0; --j) m.boundary_edges.push_back({id(0, j), id(0, j - 1)});
    m.node_curve.assign(m.nodes.size(), {});
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            if (i == 0 || i == nx || j == 0 || j == ny) m.node_curve[id(i, j)].curve = -1;
    m.h = std::hypot(dx, dy);
    return m;
}

void compute_h(TriMesh& m) {
    double h = 0.0;
    for (int e = 0; e < m.num_triangles(); ++e) h = std::max(h, m.diameter(e));
    m.h = h;
}

// Smart Laplacian smoothing of free interior nodes; accepts a move only if
// the local minimum angle does not degrade and no triangle inverts.
void smooth_free_nodes(TriMesh& m, int sweeps) {
    std::vector<std::vector<int>> incident(m.nodes.size());
    for (int e = 0; e < m.num_triangles(); ++e)
        for (int k = 0; k < 3; ++k) incident[m.triangles[e].v[k]].push_back(e);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (int v = 0; v < m.num_nodes(); ++v) {
            if (m.node_curve[v].curve != -2 || incident[v].empty()) continue;
            Vec2 sum = Vec2::Zero();
            int cnt = 0;
            for (int e : incident[v])
                for (int k = 0; k < 3; ++k)
                    if (m.triangles[e].v[k] != v) {
                        sum += m.nodes[m.triangles[e].v[k]];
                        ++cnt;
                    }
            Vec2 target = sum / cnt;
            double before = 180.0, after = 180.0;
            Vec2 old = m.nodes[v];
            for (int e : incident[v]) {
                auto& t = m.triangles[e];
                before = std::min(before, tri_min_angle_deg(m.nodes[t.v[0]], m.nodes[t.v[1]],
                                                            m.nodes[t.v[2]]));
            }
            m.nodes[v] = target;
            bool ok = true;
            for (int e : incident[v]) {
                if (m.area(e) <= 0) {
                    ok = false;
                    break;
                }
                auto& t = m.triangles[e];
                after = std::min(after, tri_min_angle_deg(m.nodes[t.v[0]], m.nodes[t.v[1]],
                                                          m.nodes[t.v[2]]));
            }
            if (!ok || after < before - 1e-12) m.nodes[v] = old;
        }
    }
}

double mesh_min_angle(const TriMesh& m) {
    double worst = 180.0;
    for (int e = 0; e < m.num_triangles(); ++e) worst = std::min(worst, m.min_angle_deg(e));
    return worst;
}

TriMesh attempt_generate(const DomainPartition& part, double h_target, double jitter,
                         std::uint64_t seed) {
    std::vector<PolyPoint> fixed;
    std::vector<std::array<int, 2>> constraint_edges;  // indices into `fixed`
    std::vector<std::pair<int, int>> poly_ranges;      // [begin,end) per polyline

    auto add_polyline = [&](std::vector<PolyPoint> poly) {
        int begin = static_cast<int>(fixed.size());
        for (auto& pp : poly) fixed.push_back(pp);
        int end = static_cast<int>(fixed.size());
        for (int k = begin; k < end; ++k) {
            int nxt = (k + 1 == end) ? begin : k + 1;
            constraint_edges.push_back({k, nxt});
        }
        poly_ranges.emplace_back(begin, end);
    };

    if (part.outer_is_box())
        add_polyline(polygonalize_box(std::get<Box>(part.outer()), h_target));
    else
        add_polyline(polygonalize(std::get<InterfaceCurve>(part.outer()), -1, h_target));
    for (int i = 0; i < part.num_inclusions(); ++i)
        add_polyline(polygonalize(part.inclusion(i), i, h_target));

    std::vector<Vec2> fixed_pts(fixed.size());
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed_pts[i] = fixed[i].p;
    SegmentGrid seg_grid(fixed_pts, constraint_edges, 2 * h_target);

    // Background interior grid with a clearance band around all polylines.
    const double clear = 0.62 * h_target;
    Vec2 lo, hi;
    if (part.outer_is_box()) {
        lo = std::get<Box>(part.outer()).lo;
        hi = std::get<Box>(part.outer()).hi;
    } else {
        std::get<InterfaceCurve>(part.outer()).bounding_box(lo, hi);
    }
    std::vector<Vec2> pts = fixed_pts;
    std::vector<PolyPoint> meta = fixed;
    int nx = static_cast<int>((hi.x() - lo.x()) / h_target) + 1;
    int ny = static_cast<int>((hi.y() - lo.y()) / h_target) + 1;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            std::uint64_t hsh = splitmix64(seed ^ (static_cast<std::uint64_t>(j) << 24 ^ i));
            double jx = (hash_unit(hsh) - 0.5) * 2 * jitter * h_target;
            double jy = (hash_unit(hsh ^ 0x5bf0372fULL) - 0.5) * 2 * jitter * h_target;
            Vec2 p(lo.x() + (i + 0.5) * h_target + jx, lo.y() + (j + 0.5) * h_target + jy);
            if (!part.inside_outer(p)) continue;
            if (seg_grid.distance(p, 2 * h_target) < clear) continue;
            pts.push_back(p);
            meta.push_back({p, -2, 0.0});
        }

    detail::Delaunay dt(pts);
    for (const auto& ce : constraint_edges) dt.recover_edge(ce[0], ce[1]);
    auto raw_tris = dt.finalize();

    TriMesh m;
    m.nodes = pts;
    m.node_curve.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        m.node_curve[i] = {meta[i].curve, meta[i].param};

    for (const auto& tv : raw_tris) {
        Vec2 c = (pts[tv[0]] + pts[tv[1]] + pts[tv[2]]) / 3.0;
        if (!part.inside_outer(c)) continue;
        Classification cls = part.classify(c, 0.0);
        m.triangles.push_back({{tv[0], tv[1], tv[2]}, cls.subdomain});
    }

    // Interface and boundary edge lists from the polyline ranges.
    std::unordered_map<std::uint64_t, std::array<int, 2>> edge_tris;
    for (int e = 0; e < m.num_triangles(); ++e)
        for (int k = 0; k < 3; ++k) {
            auto key = ekey(m.triangles[e].v[k], m.triangles[e].v[(k + 1) % 3]);
            auto it = edge_tris.find(key);
            if (it == edge_tris.end())
                edge_tris[key] = {e, -1};
            else
                it->second[1] = e;
        }

    for (std::size_t r = 0; r < poly_ranges.size(); ++r) {
        auto [begin, end] = poly_ranges[r];
        for (int k = begin; k < end; ++k) {
            int a = k, b = (k + 1 == end) ? begin : k + 1;
            auto it = edge_tris.find(ekey(a, b));
            if (it == edge_tris.end())
                throw MeshFailure("mesh: constrained edge missing after triangulation");
            if (r == 0) {
                if (it->second[1] != -1)
                    throw MeshFailure("mesh: outer boundary edge has two triangles");
                m.boundary_edges.push_back({a, b});
            } else {
                if (it->second[1] == -1)
                    throw MeshFailure("mesh: interface edge on the hull");
                int curve = static_cast<int>(r) - 1;
                int t0 = it->second[0], t1 = it->second[1];
                bool t0_inner = part.inclusion(curve).contains(m.centroid(t0));
                int inner = t0_inner ? m.triangles[t0].tag : m.triangles[t1].tag;
                m.interface_edges.push_back({a, b, curve, inner});
            }
        }
    }

    smooth_free_nodes(m, 5);
    compute_h(m);
    return m;
}

}  // namespace

double TriMesh::diameter(int e) const {
    const auto& t = triangles[e];
    return std::max({(nodes[t.v[0]] - nodes[t.v[1]]).norm(),
                     (nodes[t.v[1]] - nodes[t.v[2]]).norm(),
                     (nodes[t.v[2]] - nodes[t.v[0]]).norm()});
}

double TriMesh::min_angle_deg(int e) const {
    const auto& t = triangles[e];
    return tri_min_angle_deg(nodes[t.v[0]], nodes[t.v[1]], nodes[t.v[2]]);
}

TriMesh generate_fitted_mesh(const DomainPartition& partition, double h_target,
                             std::uint64_t seed) {
    if (h_target <= 0) throw ValidationError("generate_fitted_mesh: h_target must be positive");
    if (partition.num_inclusions() > 0 && h_target >= 0.5 * partition.min_separation())
        throw ValidationError(
            "generate_fitted_mesh: h_target must be below half the minimum curve separation");

    if (partition.outer_is_box() && partition.num_inclusions() == 0) {
        TriMesh m = structured_box_mesh(std::get<Box>(partition.outer()), h_target);
        validate_mesh(m, partition);
        return m;
    }

    const double jitters[] = {0.0, 0.10, 0.15, 0.20, 0.25};
    double worst = 0.0;
    for (int attempt = 0; attempt < 5; ++attempt) {
        TriMesh m;
        try {
            m = attempt_generate(partition, h_target, jitters[attempt],
                                 seed + 0x9e37ULL * attempt);
        } catch (const MeshFailure&) {
            continue;
        }
        worst = mesh_min_angle(m);
        if (worst >= 20.0) {
            validate_mesh(m, partition);
            return m;
        }
    }
    throw MeshFailure("generate_fitted_mesh: quality floor 20 deg not met (worst " +
                      std::to_string(worst) + " deg)");
}

TriMesh refine(const TriMesh& mesh, const DomainPartition& partition) {
    TriMesh out;
    out.nodes = mesh.nodes;
    out.node_curve = mesh.node_curve;

    enum { kInterface = 0, kBoundary = 1 };
    std::unordered_map<std::uint64_t, std::pair<int, int>> constrained;  // key -> (type, index)
    for (std::size_t i = 0; i < mesh.interface_edges.size(); ++i)
        constrained[ekey(mesh.interface_edges[i].a, mesh.interface_edges[i].b)] = {kInterface,
                                                                                   (int)i};
    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i)
        constrained[ekey(mesh.boundary_edges[i].a, mesh.boundary_edges[i].b)] = {kBoundary,
                                                                                 (int)i};

    auto arc_midpoint = [&](const InterfaceCurve& c, double ta, double tb, Vec2& p, double& tm) {
        double sa = c.arclength_at(ta), sb = c.arclength_at(tb);
        double ds = sb - sa;
        double L = c.length();
        if (ds > 0.5 * L) ds -= L;
        if (ds < -0.5 * L) ds += L;
        double sm = sa + 0.5 * ds;
        tm = c.param_at_arclength(sm);
        p = c.point(tm);
    };

    std::unordered_map<std::uint64_t, int> midpoint;
    auto midpoint_of = [&](int a, int b) {
        auto key = ekey(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec2 p = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
        TriMesh::NodeCurve nc;
        auto cit = constrained.find(key);
        if (cit != constrained.end()) {
            if (cit->second.first == kInterface) {
                const auto& ie = mesh.interface_edges[cit->second.second];
                const InterfaceCurve& c = partition.inclusion(ie.curve);
                double tm;
                arc_midpoint(c, mesh.node_curve[a].param, mesh.node_curve[b].param, p, tm);
                nc = {ie.curve, tm};
            } else {
                nc.curve = -1;
                if (!partition.outer_is_box()) {
                    const InterfaceCurve& c = std::get<InterfaceCurve>(partition.outer());
                    double tm;
                    arc_midpoint(c, mesh.node_curve[a].param, mesh.node_curve[b].param, p, tm);
                    nc.param = tm;
                }
            }
        }
        int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(p);
        out.node_curve.push_back(nc);
        midpoint[key] = id;
        return id;
    };

    for (const auto& t : mesh.triangles) {
        int m01 = midpoint_of(t.v[0], t.v[1]);
        int m12 = midpoint_of(t.v[1], t.v[2]);
        int m20 = midpoint_of(t.v[2], t.v[0]);
        out.triangles.push_back({{t.v[0], m01, m20}, t.tag});
        out.triangles.push_back({{t.v[1], m12, m01}, t.tag});
        out.triangles.push_back({{t.v[2], m20, m12}, t.tag});
        out.triangles.push_back({{m01, m12, m20}, t.tag});
    }
    for (const auto& ie : mesh.interface_edges) {
        int m = midpoint_of(ie.a, ie.b);
        out.interface_edges.push_back({ie.a, m, ie.curve, ie.inner_tag});
        out.interface_edges.push_back({m, ie.b, ie.curve, ie.inner_tag});
    }
    for (const auto& be : mesh.boundary_edges) {
        int m = midpoint_of(be.a, be.b);
        out.boundary_edges.push_back({be.a, m});
        out.boundary_edges.push_back({m, be.b});
    }
    compute_h(out);
    if (mesh_min_angle(out) < 20.0)
        throw MeshFailure("refine: projection broke the 20 deg quality floor");
    return out;
}

MeshStats mesh_statistics(const TriMesh& mesh, const DomainPartition& partition) {
    MeshStats s;
    s.h = mesh.h;
    s.nodes = mesh.num_nodes();
    s.triangles = mesh.num_triangles();
    s.min_angle_deg = mesh.num_triangles() ? mesh_min_angle(mesh) : 0.0;
    int m = partition.num_subdomains();
    s.triangles_per_subdomain.assign(m, 0);
    s.area_per_subdomain.assign(m, 0.0);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        int tag = mesh.triangles[e].tag;
        if (tag >= 1 && tag <= m) {
            s.triangles_per_subdomain[tag - 1]++;
            s.area_per_subdomain[tag - 1] += mesh.area(e);
        }
    }
    s.interface_max_chord.assign(partition.num_inclusions(), 0.0);
    s.interface_max_node_dist.assign(partition.num_inclusions(), 0.0);
    for (const auto& ie : mesh.interface_edges) {
        double chord = (mesh.nodes[ie.a] - mesh.nodes[ie.b]).norm();
        s.interface_max_chord[ie.curve] = std::max(s.interface_max_chord[ie.curve], chord);
        const InterfaceCurve& c = partition.inclusion(ie.curve);
        for (int n : {ie.a, ie.b})
            s.interface_max_node_dist[ie.curve] =
                std::max(s.interface_max_node_dist[ie.curve], c.distance(mesh.nodes[n]));
    }
    return s;
}

std::string MeshStats::to_text() const {
    std::ostringstream os;
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "h: " << fmt(h) << "\n";
    os << "min_angle_deg: " << fmt(min_angle_deg) << "\n";
    os << "nodes: " << nodes << "\n";
    os << "triangles: " << triangles << "\n";
    for (std::size_t j = 0; j < triangles_per_subdomain.size(); ++j)
        os << "subdomain_" << (j + 1) << ": triangles " << triangles_per_subdomain[j]
           << " area " << fmt(area_per_subdomain[j]) << "\n";
    for (std::size_t c = 0; c < interface_max_chord.size(); ++c)
        os << "interface_" << c << ": max_chord " << fmt(interface_max_chord[c])
           << " max_node_dist " << fmt(interface_max_node_dist[c]) << "\n";
    return os.str();
}

void validate_mesh(const TriMesh& mesh, const DomainPartition& partition) {
    const int m = partition.num_subdomains();
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        if (mesh.area(e) <= 0) throw MeshFailure("validate: inverted or degenerate triangle");
        int tag = mesh.triangles[e].tag;
        if (tag < 1 || tag > m) throw MeshFailure("validate: tag out of range");
        Classification cls = partition.classify(mesh.centroid(e), 0.0);
        if (cls.subdomain != tag)
            throw MeshFailure("validate: triangle tag disagrees with centroid classification");
        if (mesh.min_angle_deg(e) < 20.0 - 1e-9)
            throw MeshFailure("validate: min angle below 20 deg");
    }
    double tol = partition.tol_geom();
    for (const auto& ie : mesh.interface_edges) {
        const InterfaceCurve& c = partition.inclusion(ie.curve);
        for (int n : {ie.a, ie.b}) {
            if (mesh.node_curve[n].curve != ie.curve)
                throw MeshFailure("validate: interface node not bound to its curve");
            if ((c.point(mesh.node_curve[n].param) - mesh.nodes[n]).norm() > tol)
                throw MeshFailure("validate: interface node off its curve");
        }
    }
    // Edge bookkeeping: interface edges must separate two different tags,
    // boundary edges are the single-triangle edges and must be covered.
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
    for (const auto& ie : mesh.interface_edges) {
        auto it = edge_tris.find(ekey(ie.a, ie.b));
        if (it == edge_tris.end() || it->second[1] == -1)
            throw MeshFailure("validate: interface edge lacks two triangles");
        int tag0 = mesh.triangles[it->second[0]].tag;
        int tag1 = mesh.triangles[it->second[1]].tag;
        if (tag0 == tag1) throw MeshFailure("validate: interface edge inside one subdomain");
        if (ie.inner_tag != tag0 && ie.inner_tag != tag1)
            throw MeshFailure("validate: interface inner tag mismatch");
    }
    std::unordered_map<std::uint64_t, int> bset;
    for (const auto& be : mesh.boundary_edges) bset[ekey(be.a, be.b)]++;
    for (const auto& [key, tris] : edge_tris) {
        if (tris[1] == -1) {
            auto it = bset.find(key);
            if (it == bset.end() || it->second != 1)
                throw MeshFailure("validate: boundary edge not covered exactly once");
        }
    }
    if (bset.size() != mesh.boundary_edges.size())
        throw MeshFailure("validate: duplicate boundary edges");
}

void write_mesh_text(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_mesh_text: cannot open " + path);
    char buf[128];
    f << "nodes " << mesh.num_nodes() << " triangles " << mesh.num_triangles()
      << " interface_edges " << mesh.interface_edges.size() << " boundary_edges "
      << mesh.boundary_edges.size() << "\n";
    for (const auto& p : mesh.nodes) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
        f << buf;
    }
    for (const auto& t : mesh.triangles)
        f << t.v[0] << " " << t.v[1] << " " << t.v[2] << " " << t.tag << "\n";
    for (const auto& ie : mesh.interface_edges)
        f << ie.a << " " << ie.b << " " << ie.curve << " " << ie.inner_tag << "\n";
    for (const auto& be : mesh.boundary_edges) f << be.a << " " << be.b << "\n";
    if (!f) throw IoError("write_mesh_text: write failed for " + path);
}

TriMesh read_mesh_text(const std::string& path, const DomainPartition* partition) {
    std::ifstream f(path);
    if (!f) throw IoError("read_mesh_text: cannot open " + path);
    std::string kw;
    int nn, nt, ne, nb;
    f >> kw >> nn;
    if (kw != "nodes") throw IoError("read_mesh_text: bad header");
    f >> kw >> nt >> kw >> ne >> kw >> nb;
    if (!f) throw IoError("read_mesh_text: bad header");
    TriMesh m;
    m.nodes.resize(nn);
    for (auto& p : m.nodes) f >> p.x() >> p.y();
    m.triangles.resize(nt);
    for (auto& t : m.triangles) f >> t.v[0] >> t.v[1] >> t.v[2] >> t.tag;
    m.interface_edges.resize(ne);
    for (auto& ie : m.interface_edges) f >> ie.a >> ie.b >> ie.curve >> ie.inner_tag;
    m.boundary_edges.resize(nb);
    for (auto& be : m.boundary_edges) f >> be.a >> be.b;
    if (!f) throw IoError("read_mesh_text: truncated file");
    m.node_curve.assign(m.nodes.size(), {});
    if (partition) {
        for (const auto& ie : m.interface_edges)
            for (int n : {ie.a, ie.b})
                if (m.node_curve[n].curve == -2)
                    m.node_curve[n] = {ie.curve,
                                       partition->inclusion(ie.curve).closest_param(m.nodes[n])};
        for (const auto& be : m.boundary_edges)
            for (int n : {be.a, be.b})
                if (m.node_curve[n].curve == -2) {
                    double param = 0.0;
                    if (!partition->outer_is_box())
                        param = std::get<InterfaceCurve>(partition->outer())
                                    .closest_param(m.nodes[n]);
                    m.node_curve[n] = {-1, param};
                }
    }
    compute_h(m);
    return m;
}

TriMesh refit_mesh_to_partition(const TriMesh& mesh, const DomainPartition& partition) {
    TriMesh out = mesh;
    double tol = partition.tol_geom();
    // Match old curves to new ones geometrically.
    std::vector<int> curve_map;
    int old_curves = 0;
    for (const auto& ie : mesh.interface_edges) old_curves = std::max(old_curves, ie.curve + 1);
    curve_map.assign(old_curves, -1);
    for (int c = 0; c < old_curves; ++c) {
        Vec2 probe;
        bool found = false;
        for (const auto& ie : mesh.interface_edges)
            if (ie.curve == c) {
                probe = mesh.nodes[ie.a];
                found = true;
                break;
            }
        if (!found) continue;
        for (int k = 0; k < partition.num_inclusions(); ++k)
            if (partition.inclusion(k).distance(probe) < std::max(tol, 1e-9)) {
                curve_map[c] = k;
                break;
            }
    }
    for (int e = 0; e < out.num_triangles(); ++e)
        out.triangles[e].tag = partition.classify(out.centroid(e), 0.0).subdomain;
    std::vector<TriMesh::InterfaceEdge> kept;
    for (const auto& ie : mesh.interface_edges) {
        int k = curve_map[ie.curve];
        if (k < 0) continue;
        TriMesh::InterfaceEdge ne = ie;
        ne.curve = k;
        kept.push_back(ne);
    }
    out.interface_edges = kept;
    for (std::size_t n = 0; n < out.node_curve.size(); ++n) {
        int c = out.node_curve[n].curve;
        if (c >= 0) out.node_curve[n].curve = (c < old_curves && curve_map[c] >= 0)
                                                  ? curve_map[c]
                                                  : -2;
    }
    // Fix inner tags against the new partition.
    for (auto& ie : out.interface_edges) {
        Vec2 mid = 0.5 * (out.nodes[ie.a] + out.nodes[ie.b]);
        Vec2 inward = partition.inclusion(ie.curve).inward_normal(
            partition.inclusion(ie.curve).closest_param(mid));
        Vec2 probe = mid + 1e-6 * out.h * inward;
        ie.inner_tag = partition.classify(probe, 0.0).subdomain;
    }
    validate_mesh(out, partition);
    return out;
}

SubMesh extract_submesh(const TriMesh& mesh, int tag) {
    SubMesh sub;
    sub.parent_elem_to_sub.assign(mesh.num_triangles(), -1);
    std::vector<int> node_map(mesh.num_nodes(), -1);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        if (mesh.triangles[e].tag != tag) continue;
        TriMesh::Triangle t = mesh.triangles[e];
        for (int k = 0; k < 3; ++k) {
            int v = t.v[k];
            if (node_map[v] == -1) {
                node_map[v] = static_cast<int>(sub.mesh.nodes.size());
                sub.mesh.nodes.push_back(mesh.nodes[v]);
                sub.mesh.node_curve.push_back(mesh.node_curve[v]);
                sub.node_to_parent.push_back(v);
            }
            t.v[k] = node_map[v];
        }
        sub.parent_elem_to_sub[e] = static_cast<int>(sub.mesh.triangles.size());
        sub.mesh.triangles.push_back(t);
        sub.elem_to_parent.push_back(e);
    }
    // Boundary of the submesh: constrained edges bordering a kept triangle.
    std::unordered_map<std::uint64_t, int> sub_edges;
    for (const auto& t : sub.mesh.triangles)
        for (int k = 0; k < 3; ++k) sub_edges[ekey(t.v[k], t.v[(k + 1) % 3])]++;
    for (const auto& ie : mesh.interface_edges) {
        if (node_map[ie.a] == -1 || node_map[ie.b] == -1) continue;
        TriMesh::InterfaceEdge ne = ie;
        ne.a = node_map[ie.a];
        ne.b = node_map[ie.b];
        if (sub_edges.count(ekey(ne.a, ne.b))) sub.mesh.interface_edges.push_back(ne);
    }
    for (const auto& be : mesh.boundary_edges) {
        if (node_map[be.a] == -1 || node_map[be.b] == -1) continue;
        int a = node_map[be.a], b = node_map[be.b];
        if (sub_edges.count(ekey(a, b))) sub.mesh.boundary_edges.push_back({a, b});
    }
    compute_h(sub.mesh);
    return sub;
}

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(mesh) {
    lo_ = Vec2(1e300, 1e300);
    hi_ = Vec2(-1e300, -1e300);
    for (const auto& p : mesh.nodes) {
        lo_ = lo_.cwiseMin(p);
        hi_ = hi_.cwiseMax(p);
    }
    cell_ = std::max(2.0 * mesh.h, 1e-12);
    nx_ = std::max(1, static_cast<int>((hi_.x() - lo_.x()) / cell_) + 1);
    ny_ = std::max(1, static_cast<int>((hi_.y() - lo_.y()) / cell_) + 1);
    bins_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int e = 0; e < mesh.num_triangles(); ++e) {
        Vec2 tlo = mesh.nodes[mesh.triangles[e].v[0]], thi = tlo;
        for (int k = 1; k < 3; ++k) {
            tlo = tlo.cwiseMin(mesh.nodes[mesh.triangles[e].v[k]]);
            thi = thi.cwiseMax(mesh.nodes[mesh.triangles[e].v[k]]);
        }
        int i0 = std::clamp(static_cast<int>((tlo.x() - lo_.x()) / cell_), 0, nx_ - 1);
        int i1 = std::clamp(static_cast<int>((thi.x() - lo_.x()) / cell_), 0, nx_ - 1);
        int j0 = std::clamp(static_cast<int>((tlo.y() - lo_.y()) / cell_), 0, ny_ - 1);
        int j1 = std::clamp(static_cast<int>((thi.y() - lo_.y()) / cell_), 0, ny_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) bins_[j * nx_ + i].push_back(e);
    }
}

int PointLocator::locate(const Vec2& p) const {
    int i = std::clamp(static_cast<int>((p.x() - lo_.x()) / cell_), 0, nx_ - 1);
    int j = std::clamp(static_cast<int>((p.y() - lo_.y()) / cell_), 0, ny_ - 1);
    const double eps = -1e-12 * std::max(1.0, cell_);
    for (int e : bins_[j * nx_ + i]) {
        const auto& t = mesh_.triangles[e];
        const Vec2 &a = mesh_.nodes[t.v[0]], &b = mesh_.nodes[t.v[1]], &c = mesh_.nodes[t.v[2]];
        double den = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (den <= 0) continue;
        double l1 = ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / den;
        double l2 = ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / den;
        if (l1 >= eps && l2 >= eps && 1.0 - l1 - l2 >= eps) return e;
    }
    return -1;
}

}  // namespace tfem
