#pragma once

#include <cmath>

#include "inchtt/bath.hpp"
#include "inchtt/pairings.hpp"
#include "inchtt/tensor_train.hpp"

namespace inchtt {

struct BifGrid {
    double dt = 0.0;
    std::size_t N = 0;

    bool operator==(const BifGrid&) const = default;
};

/// Bath influence functional over n = m+1 grid indices, compressed as an
/// n-core tensor train with every mode of size 2N+1 (grid labels -N..N).
struct BifTT {
    TensorTrain tt;
    BifGrid grid;
    int m = 0;          // argument count minus one, odd in solver use
    double xi_ref = 1.0;
    RoundingPolicy policy;
};

/// Dense ground truth: sum over connected pairings of products of two-point
/// correlations, evaluated at signed grid indices.
inline cplx bif_dense(const TpcMatrix& B, const std::vector<std::ptrdiff_t>& ks) {
    require(ks.size() >= 2 && ks.size() % 2 == 0, "bif_dense: need an even number of indices");
    const auto bound = static_cast<std::ptrdiff_t>(B.N);
    for (const auto k : ks) require(k >= -bound && k <= bound, "bif_dense: index out of range");
    cplx total = 0.0;
    for (const Pairing& q : connected_pairings(static_cast<int>(ks.size()))) {
        cplx prod = 1.0;
        for (const auto& [a, b] : q)
            prod *= B.at(ks[static_cast<std::size_t>(a - 1)], ks[static_cast<std::size_t>(b - 1)]);
        total += prod;
    }
    return total;
}

namespace detail {

inline std::size_t predicted_product_entries(const TensorTrain& X, const TensorTrain& Y) {
    std::size_t total = 0;
    const auto bx = X.bond_dims(), by = Y.bond_dims();
    for (std::size_t j = 0; j < X.order(); ++j)
        total += bx[j] * by[j] * X.core(j).n * bx[j + 1] * by[j + 1];
    return total;
}

inline std::size_t predicted_sum_entries(const TensorTrain& X, const TensorTrain& Y) {
    std::size_t total = 0;
    const auto bx = X.bond_dims(), by = Y.bond_dims();
    for (std::size_t j = 0; j < X.order(); ++j) {
        const std::size_t rl = j == 0 ? 1 : bx[j] + by[j];
        const std::size_t rr = j + 1 == X.order() ? 1 : bx[j + 1] + by[j + 1];
        total += rl * X.core(j).n * rr;
    }
    return total;
}

/// Hadamard with a size guard, rounding the running product down whenever a
/// bond cap is in force and exceeded.
struct BifAccumulator {
    RoundingPolicy policy;
    std::size_t guard = default_size_guard;
    bool enabled() const { return policy.tol.has_value() || policy.max_bond.has_value(); }

    TensorTrain product(int m_plus_1, const std::vector<std::size_t>& mode_dims,
                        const std::vector<const TensorTrain*>& factors,
                        const std::vector<std::vector<std::size_t>>& positions) const {
        TensorTrain K = tt_extend(*factors[0], static_cast<std::size_t>(m_plus_1), positions[0],
                                  mode_dims);
        for (std::size_t i = 1; i < factors.size(); ++i) {
            const TensorTrain ext = tt_extend(*factors[i], static_cast<std::size_t>(m_plus_1),
                                              positions[i], mode_dims);
            if (predicted_product_entries(K, ext) > guard)
                throw size_guard_error("bif: intermediate product exceeds the size guard");
            K = tt_hadamard(K, ext);
            if (policy.max_bond && K.max_bond() > *policy.max_bond) K = tt_round(K, policy);
        }
        // Tolerance-only policies round once at the end of the accumulation,
        // which keeps the relative error within a single tolerance.
        if (policy.max_bond) K = tt_round(K, policy);
        return K;
    }

    void add(TensorTrain& acc, const TensorTrain& term, bool& first) const {
        if (first) {
            acc = term;
            first = false;
            return;
        }
        if (predicted_sum_entries(acc, term) > guard)
            throw size_guard_error("bif: accumulated sum exceeds the size guard");
        acc = tt_sum(acc, term);
        if (policy.max_bond && acc.max_bond() > 2 * *policy.max_bond) acc = tt_round(acc, policy);
    }

    void finish(TensorTrain& acc) const {
        if (enabled()) acc = tt_round(acc, policy);
    }
};

inline void validate_two_core(const TensorTrain& B_tt) {
    require(B_tt.order() == 2 && B_tt.core(0).n == B_tt.core(1).n,
            "bif: correlation factor must be a two-core train with square modes");
}

}  // namespace detail

/// Builds the functional directly: one Hadamard product of extended
/// correlation factors per connected pairing, summed over all pairings.
/// Rounding is skipped entirely under an empty policy so bond growth is the
/// exact block arithmetic of the sum.
inline BifTT build_bif_tt(const TensorTrain& B_tt, int m_plus_1, const RoundingPolicy& policy,
                          const BifGrid& grid, double xi_ref = 1.0,
                          std::size_t size_guard = default_size_guard) {
    detail::validate_two_core(B_tt);
    require(m_plus_1 >= 2 && m_plus_1 % 2 == 0, "build_bif_tt: argument count must be even");
    const std::size_t n = B_tt.core(0).n;
    require(n == 2 * grid.N + 1, "build_bif_tt: grid size does not match the correlation factor");
    const std::vector<std::size_t> mode_dims(static_cast<std::size_t>(m_plus_1), n);

    const detail::BifAccumulator acc{policy, size_guard};
    TensorTrain L;
    bool first = true;
    for (const Pairing& q : connected_pairings(m_plus_1)) {
        std::vector<const TensorTrain*> factors;
        std::vector<std::vector<std::size_t>> positions;
        for (const auto& [a, b] : q) {
            factors.push_back(&B_tt);
            positions.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
        }
        acc.add(L, acc.product(m_plus_1, mode_dims, factors, positions), first);
    }
    acc.finish(L);

    BifTT out;
    out.tt = std::move(L);
    out.grid = grid;
    out.m = m_plus_1 - 1;
    out.xi_ref = xi_ref;
    out.policy = policy;
    return out;
}

/// Builds the (m+1)-point functional from the (m-1)-point one: reuse terms
/// insert an arc from point 1 to each interior point j in front of the
/// previous functional; only pairings whose remainder is disconnected are
/// rebuilt from scratch.
inline BifTT build_bif_tt_iterative(const TensorTrain& B_tt, const BifTT& L_prev,
                                    const RoundingPolicy& policy,
                                    std::size_t size_guard = default_size_guard) {
    detail::validate_two_core(B_tt);
    const std::size_t n = B_tt.core(0).n;
    require(n == 2 * L_prev.grid.N + 1, "build_bif_tt_iterative: grid mismatch");
    for (const std::size_t d : L_prev.tt.mode_dims())
        require(d == n, "build_bif_tt_iterative: grid mismatch");
    const int m_plus_1 = static_cast<int>(L_prev.tt.order()) + 2;
    const std::vector<std::size_t> mode_dims(static_cast<std::size_t>(m_plus_1), n);

    const detail::BifAccumulator acc{policy, size_guard};
    const IterativeDecomposition dec = iterative_decomposition(m_plus_1);
    TensorTrain L;
    bool first = true;
    for (const int j : dec.reuse_positions) {
        const std::vector<const TensorTrain*> factors{&B_tt, &L_prev.tt};
        const std::vector<std::vector<std::size_t>> positions{
            {1, static_cast<std::size_t>(j)},
            IterativeDecomposition::complement_positions(m_plus_1, j)};
        acc.add(L, acc.product(m_plus_1, mode_dims, factors, positions), first);
    }
    for (const Pairing& q : dec.residual_pairings) {
        std::vector<const TensorTrain*> factors;
        std::vector<std::vector<std::size_t>> positions;
        for (const auto& [a, b] : q) {
            factors.push_back(&B_tt);
            positions.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
        }
        acc.add(L, acc.product(m_plus_1, mode_dims, factors, positions), first);
    }
    acc.finish(L);

    BifTT out;
    out.tt = std::move(L);
    out.grid = L_prev.grid;
    out.m = m_plus_1 - 1;
    out.xi_ref = L_prev.xi_ref;
    out.policy = policy;
    return out;
}

/// Rescales a functional built at xi_ref = 1 to coupling strength xi. The
/// functional is homogeneous of degree (m+1)/2 in xi, so a single core
/// absorbs the factor.
inline BifTT scale_xi(const BifTT& L, double xi) {
    require(L.xi_ref == 1.0, "scale_xi: input must be built at xi_ref = 1");
    require(xi >= 0.0, "scale_xi: xi must be nonnegative");
    BifTT out = L;
    const auto half_pairs = static_cast<double>((L.m + 1) / 2);
    out.tt = tt_scale(L.tt, cplx{std::pow(xi, half_pairs), 0.0});
    out.xi_ref = xi;
    return out;
}

}  // namespace inchtt
