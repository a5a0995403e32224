#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace inchtt {

using cplx = std::complex<double>;

inline constexpr cplx iu{0.0, 1.0};

/// Raised when an operation would densify or allocate beyond a configured guard.
struct size_guard_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical kernel fails (SVD breakdown, NaN/Inf propagation).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when required precomputed state (table entries, BIFs) is missing.
struct state_error : std::logic_error {
    using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

/// FNV-1a, used for cache keys; stable across runs and platforms.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace inchtt
