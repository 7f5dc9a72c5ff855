#include "tfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tfem {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kArcTableSize = 8192;

// 4-point Gauss-Legendre on [0,1].
constexpr double kGaussX[4] = {0.069431844202973712388026755553595,
                               0.33000947820757186759866712044838,
                               0.66999052179242813240133287955162,
                               0.93056815579702628761197324444640};
constexpr double kGaussW[4] = {0.17392742256872692868653197461100,
                               0.32607257743127307131346802538900,
                               0.32607257743127307131346802538900,
                               0.17392742256872692868653197461100};

double wrap_two_pi(double t) {
    t = std::fmod(t, kTwoPi);
    if (t < 0) t += kTwoPi;
    return t;
}

}  // namespace

InterfaceCurve InterfaceCurve::circle(const Vec2& center, double radius) {
    InterfaceCurve c;
    c.kind_ = Kind::Circle;
    c.center_ = center;
    c.base_radius_ = radius;
    c.holder_exponent_ = 1.0;
    c.validate();
    c.build_tables();
    return c;
}

InterfaceCurve InterfaceCurve::ellipse(const Vec2& center, double semi_major, double semi_minor) {
    InterfaceCurve c;
    c.kind_ = Kind::Ellipse;
    c.center_ = center;
    c.base_radius_ = semi_major;
    c.semi_minor_ = semi_minor;
    c.holder_exponent_ = 1.0;
    c.validate();
    c.build_tables();
    return c;
}

InterfaceCurve InterfaceCurve::perturbed_circle(const Vec2& center, double base_radius,
                                                std::vector<Perturbation> terms,
                                                double holder_exponent) {
    InterfaceCurve c;
    c.kind_ = Kind::PerturbedCircle;
    c.center_ = center;
    c.base_radius_ = base_radius;
    c.terms_ = std::move(terms);
    c.holder_exponent_ = holder_exponent;
    c.validate();
    c.build_tables();
    return c;
}

Vec2 InterfaceCurve::point(double t) const {
    t = wrap_two_pi(t);
    switch (kind_) {
        case Kind::Circle:
            return center_ + base_radius_ * Vec2(std::cos(t), std::sin(t));
        case Kind::Ellipse:
            return center_ + Vec2(base_radius_ * std::cos(t), semi_minor_ * std::sin(t));
        case Kind::PerturbedCircle:
            return center_ + polar_radius(t) * Vec2(std::cos(t), std::sin(t));
    }
    return center_;
}

Vec2 InterfaceCurve::velocity(double t) const {
    t = wrap_two_pi(t);
    switch (kind_) {
        case Kind::Circle:
            return base_radius_ * Vec2(-std::sin(t), std::cos(t));
        case Kind::Ellipse:
            return Vec2(-base_radius_ * std::sin(t), semi_minor_ * std::cos(t));
        case Kind::PerturbedCircle: {
            double rho = base_radius_;
            double drho = 0.0;
            for (const auto& term : terms_) {
                double s = std::sin(0.5 * term.frequency * t);
                double as = std::abs(s);
                rho += term.amplitude * std::pow(as, 1.0 + holder_exponent_);
                if (as > 0.0) {
                    double sgn = s > 0 ? 1.0 : -1.0;
                    drho += term.amplitude * (1.0 + holder_exponent_) *
                            std::pow(as, holder_exponent_) * sgn * 0.5 * term.frequency *
                            std::cos(0.5 * term.frequency * t);
                }
            }
            Vec2 er(std::cos(t), std::sin(t));
            Vec2 et(-std::sin(t), std::cos(t));
            return drho * er + rho * et;
        }
    }
    return Vec2::Zero();
}

Vec2 InterfaceCurve::tangent(double t) const { return velocity(t).normalized(); }

Vec2 InterfaceCurve::inward_normal(double t) const {
    // Counterclockwise parameterization: the enclosed region is to the left.
    Vec2 tau = tangent(t);
    return Vec2(-tau.y(), tau.x());
}

void InterfaceCurve::build_tables() {
    arc_table_.assign(kArcTableSize + 1, 0.0);
    const double dt = kTwoPi / kArcTableSize;
    double acc = 0.0;
    for (int k = 0; k < kArcTableSize; ++k) {
        double t0 = k * dt;
        double seg = 0.0;
        for (int q = 0; q < 4; ++q) seg += kGaussW[q] * velocity(t0 + kGaussX[q] * dt).norm();
        acc += seg * dt;
        arc_table_[k + 1] = acc;
    }
    total_length_ = acc;
}

double InterfaceCurve::arclength_at(double t) const {
    t = wrap_two_pi(t);
    const double dt = kTwoPi / kArcTableSize;
    int k = std::min(static_cast<int>(t / dt), kArcTableSize - 1);
    double t0 = k * dt;
    double seg = 0.0;
    double span = t - t0;
    if (span > 0) {
        for (int q = 0; q < 4; ++q) seg += kGaussW[q] * velocity(t0 + kGaussX[q] * span).norm();
        seg *= span;
    }
    return arc_table_[k] + seg;
}

double InterfaceCurve::param_at_arclength(double s) const {
    s = std::fmod(s, total_length_);
    if (s < 0) s += total_length_;
    auto it = std::upper_bound(arc_table_.begin(), arc_table_.end(), s);
    int k = std::max(0, static_cast<int>(it - arc_table_.begin()) - 1);
    const double dt = kTwoPi / kArcTableSize;
    double t = k * dt;
    if (arc_table_[k + 1] > arc_table_[k])
        t += dt * (s - arc_table_[k]) / (arc_table_[k + 1] - arc_table_[k]);
    for (int iter = 0; iter < 3; ++iter) {
        double resid = arclength_at(t) - s;
        double speed = velocity(t).norm();
        if (speed <= 0) break;
        t -= resid / speed;
        t = std::clamp(t, k * dt, (k + 1) * dt);
    }
    return wrap_two_pi(t);
}

double InterfaceCurve::polar_radius(double phi) const {
    switch (kind_) {
        case Kind::Circle:
            return base_radius_;
        case Kind::Ellipse: {
            double c = std::cos(phi), s = std::sin(phi);
            return base_radius_ * semi_minor_ /
                   std::sqrt(semi_minor_ * semi_minor_ * c * c +
                             base_radius_ * base_radius_ * s * s);
        }
        case Kind::PerturbedCircle: {
            double rho = base_radius_;
            for (const auto& term : terms_)
                rho += term.amplitude *
                       std::pow(std::abs(std::sin(0.5 * term.frequency * phi)),
                                1.0 + holder_exponent_);
            return rho;
        }
    }
    return base_radius_;
}

bool InterfaceCurve::contains(const Vec2& p) const {
    Vec2 d = p - center_;
    double r = d.norm();
    if (r == 0.0) return true;
    return r <= polar_radius(std::atan2(d.y(), d.x()));
}

double InterfaceCurve::closest_param(const Vec2& p) const {
    const int n = 1024;
    const double dt = kTwoPi / n;
    double best = 0.0, best_d2 = (point(0.0) - p).squaredNorm();
    for (int i = 1; i < n; ++i) {
        double d2 = (point(i * dt) - p).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i * dt;
        }
    }
    // Golden-section refinement on the bracketing interval.
    double a = best - dt, b = best + dt;
    const double gr = 0.61803398874989484820;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = (point(x1) - p).squaredNorm(), f2 = (point(x2) - p).squaredNorm();
    for (int iter = 0; iter < 80; ++iter) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = (point(x1) - p).squaredNorm();
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = (point(x2) - p).squaredNorm();
        }
    }
    return wrap_two_pi(0.5 * (a + b));
}

double InterfaceCurve::distance(const Vec2& p) const {
    if (kind_ == Kind::Circle) return std::abs((p - center_).norm() - base_radius_);
    return (point(closest_param(p)) - p).norm();
}

void InterfaceCurve::bounding_box(Vec2& lo, Vec2& hi) const {
    lo = Vec2(1e300, 1e300);
    hi = Vec2(-1e300, -1e300);
    const int n = 2048;
    for (int i = 0; i < n; ++i) {
        Vec2 q = point(i * kTwoPi / n);
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
}

void InterfaceCurve::validate() const {
    if (base_radius_ <= 0) throw ValidationError("curve radius must be positive");
    if (kind_ == Kind::Ellipse && semi_minor_ <= 0)
        throw ValidationError("ellipse semi-minor axis must be positive");
    if (holder_exponent_ <= 0 || holder_exponent_ > 1)
        throw ValidationError("holder exponent must lie in (0,1]");
    const int n = 2048;
    std::vector<Vec2> pts(n);
    double diam = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = i * kTwoPi / n;
        if (kind_ == Kind::PerturbedCircle && polar_radius(t) <= 0)
            throw ValidationError("perturbed circle radius becomes nonpositive");
        pts[i] = point(t);
    }
    for (int i = 0; i < n; ++i) diam = std::max(diam, (pts[i] - pts[0]).norm());
    // Simplicity: no two well-separated parameter samples may coincide.
    const int guard = 8;
    for (int i = 0; i < n; ++i)
        for (int j = i + guard; j < std::min(n, i + n - guard + 1); ++j) {
            int sep = std::min(j - i, n - (j - i));
            if (sep < guard) continue;
            if ((pts[i] - pts[j]).norm() < 1e-9 * diam)
                throw ValidationError("curve self-intersects (dense sampling check)");
        }
}

std::vector<CurveQuadNode> boundary_quadrature(const InterfaceCurve& curve, int panels) {
    if (panels < 1) throw ValidationError("boundary_quadrature: panels must be >= 1");
    std::vector<CurveQuadNode> nodes;
    nodes.reserve(4 * panels);
    const double dt = kTwoPi / panels;
    for (int k = 0; k < panels; ++k) {
        double t0 = k * dt;
        for (int q = 0; q < 4; ++q) {
            double t = t0 + kGaussX[q] * dt;
            CurveQuadNode node;
            node.point = curve.point(t);
            node.normal = curve.inward_normal(t);
            node.weight = kGaussW[q] * dt * curve.velocity(t).norm();
            node.param = t;
            nodes.push_back(node);
        }
    }
    return nodes;
}

double enclosed_area(const InterfaceCurve& curve) {
    double area = 0.0;
    const int panels = 2048;
    const double dt = kTwoPi / panels;
    for (int k = 0; k < panels; ++k) {
        double t0 = k * dt;
        for (int q = 0; q < 4; ++q) {
            double t = t0 + kGaussX[q] * dt;
            Vec2 p = curve.point(t);
            Vec2 v = curve.velocity(t);
            area += kGaussW[q] * dt * 0.5 * (p.x() * v.y() - p.y() * v.x());
        }
    }
    return std::abs(area);
}

namespace {

double curve_pair_min_distance(const InterfaceCurve& a, const InterfaceCurve& b) {
    const int n = 512;
    double best = 1e300;
    std::vector<Vec2> pb(n);
    for (int j = 0; j < n; ++j) pb[j] = b.point(j * kTwoPi / n);
    for (int i = 0; i < n; ++i) {
        Vec2 pa = a.point(i * kTwoPi / n);
        for (int j = 0; j < n; ++j) best = std::min(best, (pa - pb[j]).norm());
    }
    return best;
}

double curve_to_box_min_distance(const InterfaceCurve& c, const Box& box) {
    const int n = 1024;
    double best = 1e300;
    for (int i = 0; i < n; ++i) {
        Vec2 p = c.point(i * kTwoPi / n);
        double d = std::min(std::min(p.x() - box.lo.x(), box.hi.x() - p.x()),
                            std::min(p.y() - box.lo.y(), box.hi.y() - p.y()));
        best = std::min(best, d);
    }
    return best;
}

}  // namespace

DomainPartition::DomainPartition(Outer outer, std::vector<InterfaceCurve> inclusions,
                                 std::vector<int> parent)
    : outer_(std::move(outer)), inclusions_(std::move(inclusions)), parent_(std::move(parent)) {
    const int m = static_cast<int>(inclusions_.size());
    if (static_cast<int>(parent_.size()) != m)
        throw ValidationError("partition: parent list size must match inclusion count");
    children_.assign(m, {});
    for (int i = 0; i < m; ++i) {
        if (parent_[i] < -1 || parent_[i] >= m || parent_[i] == i)
            throw ValidationError("partition: invalid parent index");
        if (parent_[i] >= 0) children_[parent_[i]].push_back(i);
    }
    // Cycle check via depth walk.
    for (int i = 0; i < m; ++i) {
        int hops = 0;
        for (int p = parent_[i]; p != -1; p = parent_[p])
            if (++hops > m) throw ValidationError("partition: containment cycle");
    }

    if (outer_is_box()) {
        const Box& b = std::get<Box>(outer_);
        if (!(b.hi.x() > b.lo.x() && b.hi.y() > b.lo.y()))
            throw ValidationError("partition: degenerate outer box");
        diameter_ = (b.hi - b.lo).norm();
    } else {
        Vec2 lo, hi;
        std::get<InterfaceCurve>(outer_).bounding_box(lo, hi);
        diameter_ = (hi - lo).norm();
    }

    min_separation_ = diameter_;
    for (int i = 0; i < m; ++i) {
        // Each curve must lie strictly inside its parent region.
        const int samples = 512;
        for (int k = 0; k < samples; ++k) {
            Vec2 p = inclusions_[i].point(k * kTwoPi / samples);
            if (!inside_outer(p)) throw ValidationError("partition: inclusion leaves the domain");
            if (parent_[i] >= 0 && !inclusions_[parent_[i]].contains(p))
                throw ValidationError("partition: inclusion not inside its parent");
        }
        double d_out = outer_is_box()
                           ? curve_to_box_min_distance(inclusions_[i], std::get<Box>(outer_))
                           : curve_pair_min_distance(inclusions_[i],
                                                     std::get<InterfaceCurve>(outer_));
        if (d_out < 1e-9 * diameter_)
            throw ValidationError("partition: inclusion touches the outer boundary");
        min_separation_ = std::min(min_separation_, d_out);
        for (int j = i + 1; j < m; ++j) {
            double d = curve_pair_min_distance(inclusions_[i], inclusions_[j]);
            if (d < 1e-9 * diameter_) throw ValidationError("partition: inclusion curves touch");
            min_separation_ = std::min(min_separation_, d);
            // Non-parent/child pairs must be disjoint or nested consistently
            // with the declared containment.
            bool i_in_j = inclusions_[j].contains(inclusions_[i].point(0.0));
            bool j_in_i = inclusions_[i].contains(inclusions_[j].point(0.0));
            bool related = false;
            for (int p = parent_[i]; p != -1; p = parent_[p]) related |= (p == j);
            for (int p = parent_[j]; p != -1; p = parent_[p]) related |= (p == i);
            if ((i_in_j || j_in_i) && !related)
                throw ValidationError("partition: nesting not reflected in parent indices");
        }
    }
}

bool DomainPartition::inside_outer(const Vec2& p) const {
    if (outer_is_box()) {
        const Box& b = std::get<Box>(outer_);
        return p.x() >= b.lo.x() && p.x() <= b.hi.x() && p.y() >= b.lo.y() && p.y() <= b.hi.y();
    }
    return std::get<InterfaceCurve>(outer_).contains(p);
}

double DomainPartition::distance_to_outer_boundary(const Vec2& p) const {
    if (outer_is_box()) {
        const Box& b = std::get<Box>(outer_);
        return std::min(std::min(std::abs(p.x() - b.lo.x()), std::abs(b.hi.x() - p.x())),
                        std::min(std::abs(p.y() - b.lo.y()), std::abs(b.hi.y() - p.y())));
    }
    return std::get<InterfaceCurve>(outer_).distance(p);
}

Classification DomainPartition::classify(const Vec2& p, double tol) const {
    if (!inside_outer(p)) {
        // Points within the band around the outer boundary still count as
        // inside the closed domain.
        if (distance_to_outer_boundary(p) > std::max(tol, 0.0))
            throw OutsideDomainError("classify: point lies outside the outer domain");
    }
    const int m = num_inclusions();
    if (tol > 0) {
        for (int i = 0; i < m; ++i) {
            const InterfaceCurve& c = inclusions_[i];
            double radial_gap = std::abs((p - c.center()).norm() -
                                         c.polar_radius(std::atan2(p.y() - c.center().y(),
                                                                   p.x() - c.center().x())));
            if (radial_gap < 8 * tol && c.distance(p) < tol) return {0, i};
        }
    }
    // Deepest inclusion containing p.
    int best = -1, best_depth = -1;
    for (int i = 0; i < m; ++i) {
        if (!inclusions_[i].contains(p)) continue;
        int depth = 0;
        for (int q = parent_[i]; q != -1; q = parent_[q]) ++depth;
        if (depth > best_depth) {
            best_depth = depth;
            best = i;
        }
    }
    if (best >= 0) return {best + 1, -1};
    return {num_subdomains(), -1};
}

double DomainPartition::subdomain_area(int j) const {
    const int m = num_inclusions();
    if (j < 1 || j > num_subdomains()) throw ValidationError("subdomain_area: bad index");
    if (j <= m) {
        double area = enclosed_area(inclusions_[j - 1]);
        for (int child : children_[j - 1]) area -= enclosed_area(inclusions_[child]);
        return area;
    }
    double area;
    if (outer_is_box()) {
        const Box& b = std::get<Box>(outer_);
        area = (b.hi.x() - b.lo.x()) * (b.hi.y() - b.lo.y());
    } else {
        area = enclosed_area(std::get<InterfaceCurve>(outer_));
    }
    for (int i = 0; i < m; ++i)
        if (parent_[i] == -1) area -= enclosed_area(inclusions_[i]);
    return area;
}

double tangent_holder_estimate(const InterfaceCurve& curve, double alpha, int pairs,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, curve.length());
    double sup = 0.0;
    for (int k = 0; k < pairs; ++k) {
        double s1 = uni(rng), s2 = uni(rng);
        double ds = std::abs(s1 - s2);
        ds = std::min(ds, curve.length() - ds);
        if (ds < 1e-12 * curve.length()) continue;
        Vec2 t1 = curve.tangent(curve.param_at_arclength(s1));
        Vec2 t2 = curve.tangent(curve.param_at_arclength(s2));
        sup = std::max(sup, (t1 - t2).norm() / std::pow(ds, alpha));
    }
    return sup;
}

}  // namespace tfem
