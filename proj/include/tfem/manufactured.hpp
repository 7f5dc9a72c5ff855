#pragma once

#include <functional>
#include <string>

#include "tfem/coefficient.hpp"

namespace tfem {

/// Closed-form transmission solution with the PDE data (A, F, f, g) that it
/// induces; used to verify both solve paths against an exact answer.
struct ManufacturedSolution {
    std::string name;
    DomainPartition partition;
    CoefficientField data;

    /// Exact solution / gradient restricted to a subdomain (1-based).
    std::function<double(int subdomain, const Vec2&)> exact;
    std::function<Vec2(int subdomain, const Vec2&)> exact_grad;

    /// Checks continuity of `exact` across every interface and that the
    /// stored g matches the analytic conormal-flux jump, at `samples` points
    /// per curve. Throws ValidationError on mismatch.
    void validate(int samples = 256) const;
};

/// MS-1: unit disk with a concentric inclusion of radius 1/2, harmonic on
/// both sides, zero on the outer boundary, with a pure flux jump across the
/// interface:
///   u = x                      inside  (r < 1/2)
///   u = a (r - 1/r) cos(theta) outside (a = -1/3)
///   g(theta) = -(8/3) cos(theta)  (jump with the inward-pointing normal)
ManufacturedSolution ms1();

}  // namespace tfem
