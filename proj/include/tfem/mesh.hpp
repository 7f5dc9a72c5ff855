#pragma once

#include <array>
#include <string>
#include <vector>

#include "tfem/geometry.hpp"

namespace tfem {

/// Interface-fitted triangulation. Every triangle lies in exactly one
/// subdomain (its tag); interface edges trace each inclusion curve as a
/// closed polyline whose nodes sit on the true curve.
struct TriMesh {
    struct Triangle {
        std::array<int, 3> v;  // CCW
        int tag;               // subdomain, 1-based
    };
    struct InterfaceEdge {
        int a, b;       // ordered along the curve (CCW)
        int curve;      // inclusion index, 0-based
        int inner_tag;  // subdomain on the enclosed side
    };
    struct BoundaryEdge {
        int a, b;
    };
    /// Curve binding of a node: curve -2 = free, -1 = outer boundary curve,
    /// >= 0 = inclusion index. `param` is the curve parameter of the node.
    struct NodeCurve {
        int curve = -2;
        double param = 0.0;
    };

    std::vector<Vec2> nodes;
    std::vector<Triangle> triangles;
    std::vector<InterfaceEdge> interface_edges;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<NodeCurve> node_curve;
    double h = 0.0;  // max element diameter

    Vec2 centroid(int e) const {
        const auto& t = triangles[e];
        return (nodes[t.v[0]] + nodes[t.v[1]] + nodes[t.v[2]]) / 3.0;
    }
    double area(int e) const {
        const auto& t = triangles[e];
        Vec2 d1 = nodes[t.v[1]] - nodes[t.v[0]];
        Vec2 d2 = nodes[t.v[2]] - nodes[t.v[0]];
        return 0.5 * (d1.x() * d2.y() - d1.y() * d2.x());
    }
    double diameter(int e) const;
    double min_angle_deg(int e) const;
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
};

/// Summary produced by mesh_statistics.
struct MeshStats {
    double h = 0.0;
    double min_angle_deg = 0.0;
    int nodes = 0;
    int triangles = 0;
    std::vector<int> triangles_per_subdomain;  // index 0 = subdomain 1
    std::vector<double> area_per_subdomain;
    /// Per inclusion curve: longest interface chord and the largest node
    /// distance to the true curve.
    std::vector<double> interface_max_chord;
    std::vector<double> interface_max_node_dist;
    std::string to_text() const;
};

/// Generates an interface-fitted mesh with interface polylines at
/// arclength-uniform spacing <= h_target and background grid interior
/// points. Deterministic for a fixed seed; retries with jittered interior
/// points if the 20-degree quality floor fails.
/// Requires h_target < min_separation / 2.
TriMesh generate_fitted_mesh(const DomainPartition& partition, double h_target,
                             std::uint64_t seed = 1);

/// Uniform red refinement; midpoints of interface and outer-curve edges are
/// placed at the arclength midpoint of the true curve segment.
TriMesh refine(const TriMesh& mesh, const DomainPartition& partition);

MeshStats mesh_statistics(const TriMesh& mesh, const DomainPartition& partition);

/// Throws MeshFailure if any TriMesh invariant is violated.
void validate_mesh(const TriMesh& mesh, const DomainPartition& partition);

/// Plain-text export: header "nodes N triangles T interface_edges E
/// boundary_edges B", then node lines "x y", triangle lines "i j k tag",
/// interface-edge lines "i j curve_id inner_tag", boundary-edge lines "i j".
/// 17 significant digits; round-trips exactly.
void write_mesh_text(const TriMesh& mesh, const std::string& path);
TriMesh read_mesh_text(const std::string& path, const DomainPartition* partition = nullptr);

/// Re-tags a mesh against another partition whose curves are a subset of the
/// meshed one (used to collapse inactive interfaces onto the same geometry).
TriMesh refit_mesh_to_partition(const TriMesh& mesh, const DomainPartition& partition);

/// Triangles of one subdomain as a standalone mesh, with index maps back to
/// the parent.
struct SubMesh {
    TriMesh mesh;
    std::vector<int> node_to_parent;
    std::vector<int> elem_to_parent;
    std::vector<int> parent_elem_to_sub;  // -1 where not in the subdomain
};
SubMesh extract_submesh(const TriMesh& mesh, int tag);

/// Grid-bucketed point-to-element lookup.
class PointLocator {
  public:
    explicit PointLocator(const TriMesh& mesh);
    /// Element containing p (barycentric test with a small slack), or -1.
    int locate(const Vec2& p) const;

  private:
    const TriMesh& mesh_;
    Vec2 lo_, hi_;
    int nx_ = 0, ny_ = 0;
    double cell_ = 0.0;
    std::vector<std::vector<int>> bins_;
};

}  // namespace tfem
