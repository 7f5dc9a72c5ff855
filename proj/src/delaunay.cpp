#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace tfem::detail {

namespace {
inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}
}  // namespace

Delaunay::Delaunay(const std::vector<Vec2>& points) {
    Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Vec2 c = 0.5 * (lo + hi);
    scale_ = std::max((hi - lo).maxCoeff(), 1e-12);
    double r = 16.0 * scale_;

    pts_.reserve(points.size() + 3);
    pts_.push_back(c + Vec2(-2.5 * r, -r));
    pts_.push_back(c + Vec2(2.5 * r, -r));
    pts_.push_back(c + Vec2(0.0, 2.5 * r));
    for (const auto& p : points) pts_.push_back(p);

    vert_tri_.assign(pts_.size(), -1);
    tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
    vert_tri_[0] = vert_tri_[1] = vert_tri_[2] = 0;
    last_tri_ = 0;

    for (std::size_t i = 0; i < points.size(); ++i) insert(static_cast<int>(i) + 3, last_tri_);
}

double Delaunay::orient(int a, int b, int c) const {
    const Vec2 &pa = pts_[a], &pb = pts_[b], &pc = pts_[c];
    return (pb.x() - pa.x()) * (pc.y() - pa.y()) - (pb.y() - pa.y()) * (pc.x() - pa.x());
}

bool Delaunay::incircle(const Tri& t, int p) const {
    const Vec2 &a = pts_[t.v[0]], &b = pts_[t.v[1]], &c = pts_[t.v[2]], &d = pts_[p];
    double adx = a.x() - d.x(), ady = a.y() - d.y();
    double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    double ad2 = adx * adx + ady * ady;
    double bd2 = bdx * bdx + bdy * bdy;
    double cd2 = cdx * cdx + cdy * cdy;
    double det = adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
                 ad2 * (bdx * cdy - cdx * bdy);
    double mag = std::max({ad2, bd2, cd2});
    // Ties (cocircular point sets) count as outside; insertion order breaks
    // them deterministically.
    return det > 1e-11 * mag * mag;
}

int Delaunay::locate(int p, int hint) const {
    int cur = (hint >= 0 && hint < static_cast<int>(tris_.size()) && tris_[hint].alive)
                  ? hint
                  : static_cast<int>(tris_.size()) - 1;
    while (cur >= 0 && !tris_[cur].alive) --cur;
    std::size_t steps = 0;
    int rotate = 0;
    while (steps++ < 4 * tris_.size() + 64) {
        const Tri& t = tris_[cur];
        int next = -1;
        for (int k = 0; k < 3; ++k) {
            int i = (k + rotate) % 3;
            int u = t.v[(i + 1) % 3], v = t.v[(i + 2) % 3];
            if (orient(u, v, p) < 0) {
                next = t.adj[i];
                break;
            }
        }
        if (next < 0) return cur;
        cur = next;
        ++rotate;
    }
    // Walk failed (should not happen); fall back to a scan.
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i) {
        if (!tris_[i].alive) continue;
        const Tri& t = tris_[i];
        if (orient(t.v[0], t.v[1], p) >= 0 && orient(t.v[1], t.v[2], p) >= 0 &&
            orient(t.v[2], t.v[0], p) >= 0)
            return i;
    }
    throw MeshFailure("delaunay: point location failed");
}

void Delaunay::insert(int p, int hint) {
    int seed = locate(p, hint);

    static thread_local std::vector<int> cavity;
    static thread_local std::vector<int> stack;
    cavity.clear();
    stack.clear();
    std::unordered_map<int, bool> in_cavity;
    stack.push_back(seed);
    in_cavity[seed] = true;
    while (!stack.empty()) {
        int ti = stack.back();
        stack.pop_back();
        cavity.push_back(ti);
        for (int i = 0; i < 3; ++i) {
            int nb = tris_[ti].adj[i];
            if (nb < 0 || in_cavity.count(nb)) continue;
            if (incircle(tris_[nb], p)) {
                in_cavity[nb] = true;
                stack.push_back(nb);
            }
        }
    }

    const double eps_area = 1e-14 * scale_ * scale_;
    struct BEdge {
        int u, v, outside;
    };
    std::vector<BEdge> boundary;
    for (int expand = 0;; ++expand) {
        if (expand > 256) throw MeshFailure("delaunay: degenerate cavity");
        boundary.clear();
        bool grew = false;
        for (std::size_t ci = 0; ci < cavity.size(); ++ci) {
            int ti = cavity[ci];
            for (int i = 0; i < 3; ++i) {
                int nb = tris_[ti].adj[i];
                if (nb >= 0 && in_cavity.count(nb)) continue;
                int u = tris_[ti].v[(i + 1) % 3], v = tris_[ti].v[(i + 2) % 3];
                if (orient(u, v, p) <= eps_area) {
                    // p (numerically) on or beyond a cavity wall: absorb the
                    // neighbor so the fan stays strictly positive.
                    if (nb < 0) throw MeshFailure("delaunay: insertion outside hull");
                    in_cavity[nb] = true;
                    cavity.push_back(nb);
                    grew = true;
                    break;
                }
                boundary.push_back({u, v, nb});
            }
            if (grew) break;
        }
        if (!grew) break;
    }

    for (int ti : cavity) tris_[ti].alive = false;

    std::unordered_map<std::uint64_t, std::pair<int, int>> open;  // edge -> (tri, local)
    for (const auto& be : boundary) {
        Tri nt;
        nt.v = {be.u, be.v, p};
        nt.adj = {-1, -1, -1};
        int idx = static_cast<int>(tris_.size());
        nt.adj[2] = be.outside;  // opposite p
        if (be.outside >= 0) {
            Tri& out = tris_[be.outside];
            for (int j = 0; j < 3; ++j)
                if (in_cavity.count(out.adj[j]) || out.adj[j] < 0) {
                    int ou = out.v[(j + 1) % 3], ov = out.v[(j + 2) % 3];
                    if ((ou == be.v && ov == be.u)) out.adj[j] = idx;
                }
        }
        // Link fan neighbors through shared spoke edges (u,p) and (v,p).
        for (int side = 0; side < 2; ++side) {
            int w = side == 0 ? be.u : be.v;
            auto key = edge_key(w, p);
            auto it = open.find(key);
            int local = side == 0 ? 1 : 0;  // edge (u,p) is opposite v etc.
            if (it == open.end()) {
                open[key] = {idx, local};
            } else {
                nt.adj[local] = it->second.first;
                tris_[it->second.first].adj[it->second.second] = idx;
                open.erase(it);
            }
        }
        tris_.push_back(nt);
        vert_tri_[be.u] = idx;
        vert_tri_[be.v] = idx;
        vert_tri_[p] = idx;
        last_tri_ = idx;
    }
    if (!open.empty()) throw MeshFailure("delaunay: cavity boundary not closed");
}

int Delaunay::adj_index(const Tri& t, int neighbor) const {
    for (int i = 0; i < 3; ++i)
        if (t.adj[i] == neighbor) return i;
    return -1;
}

int Delaunay::vert_index(const Tri& t, int v) const {
    for (int i = 0; i < 3; ++i)
        if (t.v[i] == v) return i;
    return -1;
}

int Delaunay::find_incident(int v) const {
    int t = vert_tri_[v];
    if (t >= 0 && tris_[t].alive && vert_index(tris_[t], v) >= 0) return t;
    for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
        if (tris_[i].alive && vert_index(tris_[i], v) >= 0) return i;
    return -1;
}

bool Delaunay::has_edge(int a, int b) const {
    a += 3;
    b += 3;
    int start = find_incident(a);
    if (start < 0) return false;
    // Circulate around a in both directions.
    for (int dir = 0; dir < 2; ++dir) {
        int cur = start;
        for (std::size_t guard = 0; guard < tris_.size(); ++guard) {
            const Tri& t = tris_[cur];
            if (vert_index(t, b) >= 0) return true;
            int i = vert_index(t, a);
            int next = dir == 0 ? t.adj[(i + 1) % 3] : t.adj[(i + 2) % 3];
            if (next < 0 || next == start) break;
            cur = next;
        }
    }
    return false;
}

void Delaunay::flip(int t1, int e1) {
    int t2 = tris_[t1].adj[e1];
    Tri old1 = tris_[t1], old2 = tris_[t2];
    int p = old1.v[e1];
    int u = old1.v[(e1 + 1) % 3];
    int v = old1.v[(e1 + 2) % 3];
    int i2 = adj_index(old2, t1);
    int q = old2.v[i2];

    int n_uq = old2.adj[vert_index(old2, v)];
    int n_qv = old2.adj[vert_index(old2, u)];
    int n_pu = old1.adj[vert_index(old1, v)];
    int n_vp = old1.adj[vert_index(old1, u)];

    tris_[t1].v = {p, u, q};
    tris_[t1].adj = {n_uq, t2, n_pu};
    tris_[t2].v = {p, q, v};
    tris_[t2].adj = {n_qv, n_vp, t1};

    auto relink = [&](int tri, int from_a, int from_b, int to) {
        if (tri < 0) return;
        Tri& t = tris_[tri];
        for (int i = 0; i < 3; ++i)
            if (t.adj[i] == from_a || t.adj[i] == from_b) {
                int eu = t.v[(i + 1) % 3], ev = t.v[(i + 2) % 3];
                // Only relink the entry that actually shares the edge.
                if (vert_index(tris_[to], eu) >= 0 && vert_index(tris_[to], ev) >= 0)
                    t.adj[i] = to;
            }
    };
    relink(n_uq, t2, t1, t1);
    relink(n_pu, t1, t2, t1);
    relink(n_qv, t2, t1, t2);
    relink(n_vp, t1, t2, t2);
    vert_tri_[p] = t1;
    vert_tri_[u] = t1;
    vert_tri_[q] = t1;
    vert_tri_[v] = t2;
}

void Delaunay::recover_edge(int a, int b) {
    if (has_edge(a, b)) return;
    int ia = a + 3, ib = b + 3;
    const double eps = 1e-14 * scale_ * scale_;

    for (std::size_t rounds = 0; rounds < 64; ++rounds) {
        if (has_edge(a, b)) return;
        // Find the triangle at `ia` whose far edge crosses segment ia->ib.
        int start = find_incident(ia);
        if (start < 0) throw MeshFailure("constraint recovery: lost vertex");
        int cross_tri = -1;
        std::vector<int> ring;
        {
            int cur = start;
            for (std::size_t guard = 0; guard < tris_.size(); ++guard) {
                ring.push_back(cur);
                int i = vert_index(tris_[cur], ia);
                int next = tris_[cur].adj[(i + 1) % 3];
                if (next < 0) break;
                if (next == start) break;
                cur = next;
            }
            int cur2 = start;
            for (std::size_t guard = 0; guard < tris_.size(); ++guard) {
                int i = vert_index(tris_[cur2], ia);
                int next = tris_[cur2].adj[(i + 2) % 3];
                if (next < 0 || next == start) break;
                ring.push_back(next);
                cur2 = next;
            }
        }
        for (int ti : ring) {
            const Tri& t = tris_[ti];
            int i = vert_index(t, ia);
            int u = t.v[(i + 1) % 3], v = t.v[(i + 2) % 3];
            double su = orient(ia, ib, u), sv = orient(ia, ib, v);
            double du = orient(u, v, ia), dv = orient(u, v, ib);
            if (su > eps && sv < -eps && du * dv < 0) {
                cross_tri = ti;
                break;
            }
        }
        if (cross_tri < 0) throw MeshFailure("constraint recovery: no crossing wedge");

        // Flip the first crossing edge whose quad is convex; restart scan.
        int ti = cross_tri;
        bool flipped = false;
        for (std::size_t guard = 0; guard < 4 * tris_.size() && !flipped; ++guard) {
            const Tri& t = tris_[ti];
            int i = -1;
            for (int k = 0; k < 3; ++k) {
                int u = t.v[(k + 1) % 3], v = t.v[(k + 2) % 3];
                if (u == ia || v == ia || u == ib || v == ib) continue;
                double su = orient(ia, ib, u), sv = orient(ia, ib, v);
                double du = orient(u, v, ia), dv = orient(u, v, ib);
                if (su * sv < 0 && du * dv < 0) {
                    i = k;
                    break;
                }
            }
            if (i < 0) break;
            int t2 = tris_[ti].adj[i];
            if (t2 < 0) throw MeshFailure("constraint recovery: open crossing");
            // Flip validity: both replacement triangles strictly CCW.
            int p = tris_[ti].v[i];
            int u = tris_[ti].v[(i + 1) % 3], v = tris_[ti].v[(i + 2) % 3];
            int q = tris_[t2].v[adj_index(tris_[t2], ti)];
            if (orient(p, u, q) > eps && orient(p, q, v) > eps) {
                flip(ti, i);
                flipped = true;
            } else {
                ti = t2;  // move deeper along the pipe and try there
            }
        }
        if (!flipped && !has_edge(a, b))
            throw MeshFailure("constraint recovery: stuck (no convex flip)");
    }
    if (!has_edge(a, b)) throw MeshFailure("constraint recovery: did not converge");
}

std::vector<std::array<int, 3>> Delaunay::finalize() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
        if (!t.alive) continue;
        if (t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3) continue;
        out.push_back({t.v[0] - 3, t.v[1] - 3, t.v[2] - 3});
    }
    return out;
}

}  // namespace tfem::detail
