#pragma once

// Internal incremental Delaunay triangulation with constrained-edge
// recovery. Not part of the public API; the mesh generator drives it.

#include <array>
#include <vector>

#include "tfem/core.hpp"

namespace tfem::detail {

class Delaunay {
  public:
    /// Triangulates the given points (inserted in order). The first three
    /// internal vertices are a super-triangle; public indices refer to the
    /// input vector.
    explicit Delaunay(const std::vector<Vec2>& points);

    bool has_edge(int a, int b) const;
    /// Force edge (a,b) into the triangulation by flipping crossing edges.
    void recover_edge(int a, int b);

    /// Triangles not touching the super-triangle, CCW.
    std::vector<std::array<int, 3>> finalize() const;

  private:
    struct Tri {
        std::array<int, 3> v;    // CCW
        std::array<int, 3> adj;  // adj[i] opposite v[i]; -1 = none
        bool alive = true;
    };

    const Vec2& pt(int i) const { return pts_[i]; }
    double orient(int a, int b, int c) const;
    bool incircle(const Tri& t, int p) const;
    int locate(int p, int hint) const;
    void insert(int p, int hint);
    int adj_index(const Tri& t, int neighbor) const;
    int vert_index(const Tri& t, int v) const;
    int find_incident(int v) const;
    void flip(int t1, int e1);

    std::vector<Vec2> pts_;  // super vertices first, then input points
    std::vector<Tri> tris_;
    std::vector<int> vert_tri_;  // some alive triangle per vertex
    int last_tri_ = 0;
    double scale_ = 1.0;
};

}  // namespace tfem::detail
