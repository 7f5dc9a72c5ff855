#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tfem {

using Vec2 = Eigen::Vector2d;

/// Base class for all solver errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutsideDomainError : Error { using Error::Error; };
struct MeshFailure : Error { using Error::Error; };
struct SingularElementError : Error { using Error::Error; };
struct NoConvergenceError : Error { using Error::Error; };
struct IncompatibleDataError : Error { using Error::Error; };
struct UnknownInterfaceError : Error { using Error::Error; };
struct EmptyRegionError : Error { using Error::Error; };
struct MissingAuxiliaryError : Error { using Error::Error; };
struct EvalError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

struct ParseError : Error {
    int line = 0;
    int col = 0;
    ParseError(const std::string& msg, int line_, int col_)
        : Error(msg + " (line " + std::to_string(line_) + ", col " + std::to_string(col_) + ")"),
          line(line_), col(col_) {}
};

/// splitmix64; used where per-index deterministic noise is needed
/// independently of any generator state (mesh jitter).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Map a 64-bit hash to [0,1).
inline double hash_unit(std::uint64_t x) {
    return static_cast<double>(splitmix64(x) >> 11) * 0x1.0p-53;
}

/// FNV-1a over a string, for problem/config fingerprints in reports.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace tfem
