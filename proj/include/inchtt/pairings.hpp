#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "inchtt/common.hpp"

namespace inchtt {

/// Arc of a pairing, 1-based endpoints with first < second.
using Arc = std::pair<int, int>;

/// Perfect matching of {1..m}, arcs sorted by first endpoint.
using Pairing = std::vector<Arc>;

/// Two arcs cross when their endpoints interleave: a < c < b < d.
inline bool arcs_cross(const Arc& p, const Arc& q) {
    return (p.first < q.first && q.first < p.second && p.second < q.second) ||
           (q.first < p.first && p.first < q.second && q.second < p.second);
}

namespace detail {

inline void validate_pairing(const Pairing& q) {
    require(!q.empty(), "pairing: empty");
    std::vector<int> seen;
    for (const auto& [a, b] : q) {
        require(a >= 1 && a < b, "pairing: arc endpoints must satisfy 1 <= a < b");
        seen.push_back(a);
        seen.push_back(b);
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i)
        require(seen[i] == static_cast<int>(i) + 1, "pairing: endpoints must cover 1..m exactly once");
}

}  // namespace detail

/// True when the crossing graph of the arcs is connected.
inline bool is_connected(const Pairing& q) {
    detail::validate_pairing(q);
    const std::size_t n = q.size();
    if (n == 1) return true;
    std::vector<char> visited(n, 0);
    std::vector<std::size_t> stack{0};
    visited[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t j = 0; j < n; ++j)
            if (!visited[j] && arcs_cross(q[i], q[j])) {
                visited[j] = 1;
                ++count;
                stack.push_back(j);
            }
    }
    return count == n;
}

namespace detail {

inline void enumerate_pairings(std::vector<int>& free_points, Pairing& current,
                               std::vector<Pairing>& out) {
    if (free_points.empty()) {
        out.push_back(current);
        return;
    }
    // Always open an arc at the smallest free point, so arcs come out sorted.
    const int a = free_points.front();
    for (std::size_t i = 1; i < free_points.size(); ++i) {
        const int b = free_points[i];
        std::vector<int> rest;
        rest.reserve(free_points.size() - 2);
        for (std::size_t k = 1; k < free_points.size(); ++k)
            if (k != i) rest.push_back(free_points[k]);
        current.emplace_back(a, b);
        enumerate_pairings(rest, current, out);
        current.pop_back();
    }
}

}  // namespace detail

/// All connected pairings of {1..m} in lexicographic order. The double
/// factorial growth caps m at 12.
inline std::vector<Pairing> connected_pairings(int m) {
    require(m >= 2 && m % 2 == 0 && m <= 12, "connected_pairings: m must be even, 2 <= m <= 12");
    std::vector<int> points(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) points[static_cast<std::size_t>(i)] = i + 1;
    std::vector<Pairing> all;
    Pairing current;
    detail::enumerate_pairings(points, current, all);
    std::vector<Pairing> connected;
    for (auto& q : all)
        if (is_connected(q)) connected.push_back(std::move(q));
    return connected;
}

/// Splits the connected pairings of {1..m} by the arc (1,j) into terms that
/// reuse the full (m-2)-point sum and leftover pairings that do not.
///
/// Removing (1,j) from a connected pairing and relabelling {2..m}\{j} to
/// {1..m-2} either leaves a connected pairing (then the whole group
/// "(1,j) x any connected (m-2)-pairing" appears, recorded by j alone) or a
/// disconnected one (recorded explicitly in residual_pairings).
struct IterativeDecomposition {
    int m = 0;
    std::vector<int> reuse_positions;
    std::vector<Pairing> residual_pairings;

    /// 1-based positions {2..m} \ {j}: where the (m-2)-point factor sits
    /// after inserting the arc (1,j).
    static std::vector<std::size_t> complement_positions(int m, int j) {
        require(m >= 4 && j >= 2 && j <= m, "complement_positions: bad arguments");
        std::vector<std::size_t> pos;
        pos.reserve(static_cast<std::size_t>(m - 2));
        for (int p = 2; p <= m; ++p)
            if (p != j) pos.push_back(static_cast<std::size_t>(p));
        return pos;
    }
};

/// Relabels a pairing of {1..m-2} onto the points {2..m}\{j} and adds the
/// arc (1,j).
inline Pairing embed_reuse(int m, int j, const Pairing& inner) {
    const auto points = IterativeDecomposition::complement_positions(m, j);
    require(inner.size() * 2 == points.size(), "embed_reuse: inner pairing has wrong size");
    Pairing q;
    q.reserve(inner.size() + 1);
    q.emplace_back(1, j);
    for (const auto& [a, b] : inner)
        q.emplace_back(static_cast<int>(points[static_cast<std::size_t>(a - 1)]),
                       static_cast<int>(points[static_cast<std::size_t>(b - 1)]));
    std::sort(q.begin(), q.end());
    return q;
}

inline IterativeDecomposition iterative_decomposition(int m) {
    require(m >= 6 && m % 2 == 0 && m <= 12, "iterative_decomposition: m must be even, 6 <= m <= 12");
    IterativeDecomposition d;
    d.m = m;
    for (int j = 3; j <= m - 1; ++j) d.reuse_positions.push_back(j);
    for (const Pairing& q : connected_pairings(m)) {
        const int j = q.front().second;  // unique arc from point 1
        Pairing inner;
        inner.reserve(q.size() - 1);
        const auto points = IterativeDecomposition::complement_positions(m, j);
        const auto relabel = [&](int p) {
            const auto it = std::lower_bound(points.begin(), points.end(), static_cast<std::size_t>(p));
            return static_cast<int>(it - points.begin()) + 1;
        };
        for (std::size_t i = 1; i < q.size(); ++i)
            inner.emplace_back(relabel(q[i].first), relabel(q[i].second));
        if (!is_connected(inner)) d.residual_pairings.push_back(q);
    }
    return d;
}

}  // namespace inchtt
