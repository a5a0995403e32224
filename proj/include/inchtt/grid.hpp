#pragma once

#include <vector>

#include "inchtt/common.hpp"

namespace inchtt {

/// Time grid with a doubled origin. Labels 0..2N+1 map to
///   l < N      -> k = l - N          (negative branch)
///   l = N      -> 0-                  (origin, negative side)
///   l = N+1    -> 0+                  (origin, positive side)
///   l > N+1    -> k = l - N - 1       (positive branch)
/// Both origin labels sit at physical time 0 and share one correlation index.
struct LabelGrid {
    std::size_t N = 0;
    double dt = 0.0;

    std::size_t n_labels() const { return 2 * N + 2; }

    bool valid(std::size_t l) const { return l < n_labels(); }

    /// Signed step count of the label's physical time.
    int time_index(std::size_t l) const {
        const auto n = static_cast<int>(N);
        const auto i = static_cast<int>(l);
        if (i <= n) return i - n;
        return i - n - 1;
    }

    double time(std::size_t l) const { return time_index(l) * dt; }

    /// Branch sign: -1 on the negative side including 0-, +1 from 0+ on.
    int sign(std::size_t l) const { return l <= N ? -1 : 1; }

    /// Row index into correlation-grid objects (0..2N); both origin labels
    /// collapse onto the k=0 row.
    std::size_t phys(std::size_t l) const { return l <= N ? l : l - 1; }

    /// Label reflection k -> -k, exchanging the origin branches.
    std::size_t mirror(std::size_t l) const { return 2 * N + 1 - l; }

    std::size_t origin_minus() const { return N; }
    std::size_t origin_plus() const { return N + 1; }

    /// Label of a strictly negative step count, or 0-.
    std::size_t label_neg(int k) const {
        require(k <= 0 && -k <= static_cast<int>(N), "LabelGrid: negative step out of range");
        return static_cast<std::size_t>(static_cast<int>(N) + k);
    }

    /// Label of a strictly positive step count, or 0+.
    std::size_t label_pos(int k) const {
        require(k >= 0 && k <= static_cast<int>(N), "LabelGrid: positive step out of range");
        return static_cast<std::size_t>(static_cast<int>(N) + 1 + k);
    }
};

/// Composite trapezoid weights for one integration window [l_prev, l_f],
/// indexed by label offset. Windows through the origin split there: each
/// branch is a separate trapezoid, so the origin labels carry dt/2 from
/// their own side and 0 when that side has no width. Weights sum to the
/// physical window length.
inline std::vector<double> trapezoid_weights(const LabelGrid& g, std::size_t l_prev,
                                             std::size_t l_f) {
    require(g.valid(l_prev) && g.valid(l_f) && l_prev <= l_f,
            "trapezoid_weights: bad window labels");
    std::vector<double> w(l_f - l_prev + 1, 0.0);
    const auto fill_branch = [&](std::size_t a, std::size_t b) {
        if (b <= a) return;  // single node: zero-width branch
        for (std::size_t l = a; l <= b; ++l)
            w[l - l_prev] += (l == a || l == b) ? 0.5 * g.dt : g.dt;
    };
    if (l_f <= g.origin_minus() || l_prev >= g.origin_plus()) {
        fill_branch(l_prev, l_f);
    } else {
        fill_branch(l_prev, g.origin_minus());
        fill_branch(g.origin_plus(), l_f);
    }
    return w;
}

}  // namespace inchtt
