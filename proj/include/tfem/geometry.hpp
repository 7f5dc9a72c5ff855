#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "tfem/core.hpp"

namespace tfem {

/// Closed parametric curve bounding an inclusion (or serving as the outer
/// boundary). Parameterized counterclockwise by an angle t in [0, 2pi);
/// star-shaped about its center, so containment tests reduce to a polar
/// radius comparison.
///
/// Kinds:
///   circle            rho(t) = R
///   ellipse           (a cos t, b sin t), a = base_radius, b = semi_minor
///   perturbed-circle  rho(t) = R + sum_k amp_k |sin(k t / 2)|^(1+alpha)
///
/// The perturbed profile has an alpha-Holder tangent (C^{1,alpha} but not
/// C^{1,1} for alpha < 1), which is the regularity class the solver is
/// exercised against.
class InterfaceCurve {
  public:
    enum class Kind { Circle, Ellipse, PerturbedCircle };

    struct Perturbation {
        int frequency = 1;
        double amplitude = 0.0;
    };

    static InterfaceCurve circle(const Vec2& center, double radius);
    static InterfaceCurve ellipse(const Vec2& center, double semi_major, double semi_minor);
    static InterfaceCurve perturbed_circle(const Vec2& center, double base_radius,
                                           std::vector<Perturbation> terms,
                                           double holder_exponent);

    Kind kind() const { return kind_; }
    const Vec2& center() const { return center_; }
    double base_radius() const { return base_radius_; }
    double semi_minor() const { return semi_minor_; }
    double holder_exponent() const { return holder_exponent_; }
    const std::vector<Perturbation>& perturbation() const { return terms_; }

    /// Position at parameter t (any real; wraps mod 2pi).
    Vec2 point(double t) const;
    /// d(point)/dt, never zero for valid curves.
    Vec2 velocity(double t) const;
    /// Unit tangent at t.
    Vec2 tangent(double t) const;
    /// Unit normal at t pointing INTO the enclosed region.
    Vec2 inward_normal(double t) const;

    double length() const { return total_length_; }
    /// Arclength from t=0 to t (t in [0,2pi]).
    double arclength_at(double t) const;
    /// Inverse of arclength_at; s wraps mod length().
    double param_at_arclength(double s) const;
    Vec2 point_at_arclength(double s) const { return point(param_at_arclength(s)); }
    /// Unit inward normal at arclength s.
    Vec2 normal_at_arclength(double s) const { return inward_normal(param_at_arclength(s)); }

    /// Polar radius of the curve in direction phi from the center.
    double polar_radius(double phi) const;
    /// True if p is strictly inside the curve (boundary counts as inside).
    bool contains(const Vec2& p) const;
    /// Parameter of the closest curve point to p (coarse scan + refinement).
    double closest_param(const Vec2& p) const;
    /// Unsigned distance from p to the curve.
    double distance(const Vec2& p) const;

    /// Axis-aligned bounding box (loose, from dense samples).
    void bounding_box(Vec2& lo, Vec2& hi) const;

  private:
    InterfaceCurve() = default;
    void build_tables();
    void validate() const;

    Kind kind_ = Kind::Circle;
    Vec2 center_ = Vec2::Zero();
    double base_radius_ = 1.0;
    double semi_minor_ = 1.0;       // ellipse only
    double holder_exponent_ = 1.0;  // alpha of the tangent modulus
    std::vector<Perturbation> terms_;

    double total_length_ = 0.0;
    std::vector<double> arc_table_;  // cumulative arclength at uniform t samples
};

/// Quadrature node on a curve: position, inward unit normal, weight (ds),
/// and the curve parameter it came from.
struct CurveQuadNode {
    Vec2 point;
    Vec2 normal;
    double weight;
    double param;
};

/// Composite Gauss rule along the whole curve, `panels` panels of 4 points.
/// Weights sum to the curve length; each node carries the inward normal.
std::vector<CurveQuadNode> boundary_quadrature(const InterfaceCurve& curve, int panels);

/// Area enclosed by the curve (positive), via the shoelace line integral.
double enclosed_area(const InterfaceCurve& curve);

struct Box {
    Vec2 lo;
    Vec2 hi;
};

/// Result of point classification: either a subdomain index (1-based; M is
/// the outer subdomain) or an interface hit.
struct Classification {
    int subdomain = 0;      // 0 when on an interface
    int interface_id = -1;  // 0-based inclusion index when subdomain == 0
    bool on_interface() const { return subdomain == 0; }
};

/// Outer domain plus M-1 disjoint-or-nested inclusion curves. Subdomain j
/// (1-based) is the region inside inclusion j minus its children; subdomain
/// M touches the outer boundary. Curves never touch, so every point lies on
/// the boundary of at most two subdomains.
class DomainPartition {
  public:
    using Outer = std::variant<Box, InterfaceCurve>;

    /// Validates containment/disjointness and positive curve separations;
    /// throws ValidationError on violation. `parent[i]` is the 0-based index
    /// of the inclusion directly containing inclusion i, or -1 for the outer
    /// region.
    DomainPartition(Outer outer, std::vector<InterfaceCurve> inclusions,
                    std::vector<int> parent);

    static DomainPartition single(Outer outer) {
        return DomainPartition(std::move(outer), {}, {});
    }

    int num_subdomains() const { return static_cast<int>(inclusions_.size()) + 1; }
    int num_inclusions() const { return static_cast<int>(inclusions_.size()); }
    const std::vector<InterfaceCurve>& inclusions() const { return inclusions_; }
    const InterfaceCurve& inclusion(int i) const { return inclusions_.at(i); }
    int parent_of(int i) const { return parent_.at(i); }
    const std::vector<int>& children_of(int i) const { return children_.at(i); }
    const Outer& outer() const { return outer_; }
    bool outer_is_box() const { return std::holds_alternative<Box>(outer_); }

    double diameter() const { return diameter_; }
    /// Default on-interface detection band: 1e-10 * outer diameter.
    double tol_geom() const { return 1e-10 * diameter_; }
    /// Smallest distance between any two curves (incl. the outer boundary).
    double min_separation() const { return min_separation_; }

    bool inside_outer(const Vec2& p) const;
    double distance_to_outer_boundary(const Vec2& p) const;

    /// Subdomain index of p, or INTERFACE when within tol of some inclusion
    /// curve. Throws OutsideDomainError for exterior points. Pass tol = 0 to
    /// force a subdomain answer for on-curve points.
    Classification classify(const Vec2& p, double tol) const;
    Classification classify(const Vec2& p) const { return classify(p, tol_geom()); }

    /// Area of subdomain j (inside curve j minus children; j = M uses the
    /// outer region), from exact curve quadrature.
    double subdomain_area(int j) const;

  private:
    Outer outer_;
    std::vector<InterfaceCurve> inclusions_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    double diameter_ = 0.0;
    double min_separation_ = 0.0;
};

/// Sampled-tangent Holder estimate: sup |t(s1)-t(s2)| / |s1-s2|^alpha over
/// `pairs` random arclength pairs (fixed seed). A lower bound on the true
/// seminorm; finite and stable for curves matching their declared exponent.
double tangent_holder_estimate(const InterfaceCurve& curve, double alpha, int pairs,
                               std::uint64_t seed);

}  // namespace tfem
