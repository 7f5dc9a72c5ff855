#pragma once

#include <vector>

#include "tfem/core.hpp"

namespace tfem {

/// Quadrature point in barycentric coordinates with weight normalized so
/// weights sum to 1 (multiply by triangle area when integrating).
struct TriQuadPoint {
    double l0, l1, l2;
    double w;
};

/// Symmetric triangle rule exact for polynomials of the given degree.
/// Supported degrees: 1, 2, 4, 6, 8 (rounds up).
const std::vector<TriQuadPoint>& triangle_rule(int degree);

/// Gauss-Legendre nodes/weights on [0,1]; weights sum to 1.
/// Supported point counts: 1..6 (rounds up).
struct LineQuadPoint {
    double x;
    double w;
};
const std::vector<LineQuadPoint>& line_rule(int points);

}  // namespace tfem
