#include "tfem/quadrature.hpp"

#include <array>
#include <stdexcept>

namespace tfem {

namespace {

void push_sym3(std::vector<TriQuadPoint>& pts, double a, double w) {
    // Permutations of (a, b, b), b = (1-a)/2.
    double b = 0.5 * (1.0 - a);
    pts.push_back({a, b, b, w});
    pts.push_back({b, a, b, w});
    pts.push_back({b, b, a, w});
}

void push_sym6(std::vector<TriQuadPoint>& pts, double a, double b, double w) {
    double c = 1.0 - a - b;
    pts.push_back({a, b, c, w});
    pts.push_back({a, c, b, w});
    pts.push_back({b, a, c, w});
    pts.push_back({b, c, a, w});
    pts.push_back({c, a, b, w});
    pts.push_back({c, b, a, w});
}

std::vector<TriQuadPoint> make_tri_rule(int degree) {
    std::vector<TriQuadPoint> pts;
    if (degree <= 1) {
        pts.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0});
    } else if (degree <= 2) {
        push_sym3(pts, 2.0 / 3, 1.0 / 3);
    } else if (degree <= 4) {
        // Dunavant degree 4, 6 points.
        push_sym3(pts, 0.816847572980459, 0.109951743655322);
        push_sym3(pts, 0.108103018168070, 0.223381589678011);
    } else if (degree <= 6) {
        // Dunavant degree 6, 12 points.
        push_sym3(pts, 0.873821971016996, 0.050844906370207);
        push_sym3(pts, 0.501426509658179, 0.116786275726379);
        push_sym6(pts, 0.636502499121399, 0.310352451033785, 0.082851075618374);
    } else {
        // Dunavant degree 8, 16 points.
        pts.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, 0.144315607677787});
        push_sym3(pts, 0.081414823414554, 0.095091634413245);
        push_sym3(pts, 0.658861384496480, 0.103217370534718);
        push_sym3(pts, 0.898905543365938, 0.032458497623198);
        push_sym6(pts, 0.008394777409958, 0.263112829634638, 0.027230314174435);
    }
    return pts;
}

std::vector<LineQuadPoint> make_line_rule(int n) {
    // Nodes on [-1,1] mapped to [0,1], weights halved.
    std::vector<std::array<double, 2>> raw;
    switch (n) {
        case 1:
            raw = {{0.0, 2.0}};
            break;
        case 2:
            raw = {{-0.5773502691896257, 1.0}, {0.5773502691896257, 1.0}};
            break;
        case 3:
            raw = {{-0.7745966692414834, 5.0 / 9},
                   {0.0, 8.0 / 9},
                   {0.7745966692414834, 5.0 / 9}};
            break;
        case 4:
            raw = {{-0.8611363115940526, 0.3478548451374538},
                   {-0.3399810435848563, 0.6521451548625461},
                   {0.3399810435848563, 0.6521451548625461},
                   {0.8611363115940526, 0.3478548451374538}};
            break;
        case 5:
            raw = {{-0.9061798459386640, 0.2369268850561891},
                   {-0.5384693101056831, 0.4786286704993665},
                   {0.0, 0.5688888888888889},
                   {0.5384693101056831, 0.4786286704993665},
                   {0.9061798459386640, 0.2369268850561891}};
            break;
        default:
            raw = {{-0.9324695142031521, 0.1713244923791704},
                   {-0.6612093864662645, 0.3607615730481386},
                   {-0.2386191860831969, 0.4679139345726910},
                   {0.2386191860831969, 0.4679139345726910},
                   {0.6612093864662645, 0.3607615730481386},
                   {0.9324695142031521, 0.1713244923791704}};
            break;
    }
    std::vector<LineQuadPoint> pts;
    for (auto& r : raw) pts.push_back({0.5 * (r[0] + 1.0), 0.5 * r[1]});
    return pts;
}

}  // namespace

const std::vector<TriQuadPoint>& triangle_rule(int degree) {
    static const std::vector<TriQuadPoint> r1 = make_tri_rule(1);
    static const std::vector<TriQuadPoint> r2 = make_tri_rule(2);
    static const std::vector<TriQuadPoint> r4 = make_tri_rule(4);
    static const std::vector<TriQuadPoint> r6 = make_tri_rule(6);
    static const std::vector<TriQuadPoint> r8 = make_tri_rule(8);
    if (degree <= 1) return r1;
    if (degree <= 2) return r2;
    if (degree <= 4) return r4;
    if (degree <= 6) return r6;
    return r8;
}

const std::vector<LineQuadPoint>& line_rule(int points) {
    static const std::vector<LineQuadPoint> rules[6] = {
        make_line_rule(1), make_line_rule(2), make_line_rule(3),
        make_line_rule(4), make_line_rule(5), make_line_rule(6)};
    if (points < 1) points = 1;
    if (points > 6) points = 6;
    return rules[points - 1];
}

}  // namespace tfem
