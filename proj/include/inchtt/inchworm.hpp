#pragma once

#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "inchtt/bif.hpp"
#include "inchtt/propagator_table.hpp"
#include "inchtt/system.hpp"

namespace inchtt {

/// Compressed influence functionals keyed by integral dimension m. An empty
/// set means a decoupled bath: every memory integral vanishes.
class BifSet {
public:
    BifSet() = default;

    void add(BifTT L) {
        require(L.m >= 1 && L.m % 2 == 1, "BifSet: integral dimension must be odd");
        require(L.tt.order() == static_cast<std::size_t>(L.m) + 1,
                "BifSet: train order must be m+1");
        require(items_.empty() || items_.front().grid == L.grid,
                "BifSet: mixed grids");
        require(find(L.m) == nullptr, "BifSet: duplicate dimension");
        items_.push_back(std::move(L));
    }

    bool empty() const { return items_.empty(); }

    const BifTT* find(int m) const {
        for (const auto& item : items_)
            if (item.m == m) return &item;
        return nullptr;
    }

    const BifTT& at(int m) const {
        const BifTT* p = find(m);
        require(p != nullptr, "BifSet: no influence functional for m = " + std::to_string(m));
        return *p;
    }

    const BifGrid* grid() const { return items_.empty() ? nullptr : &items_.front().grid; }

private:
    std::vector<BifTT> items_;
};

inline std::string label_name(const LabelGrid& g, std::size_t l) {
    if (l == g.origin_minus()) return "0-";
    if (l == g.origin_plus()) return "0+";
    return std::to_string(g.time_index(l));
}

namespace detail {

/// Quadrature weights of every window [l, l_f] with l in [l_i, l_f].
/// wtab[l - l_i][l' - l] weights node l' of the window starting at l.
inline std::vector<std::vector<double>> window_weights(const LabelGrid& g, std::size_t l_i,
                                                       std::size_t l_f) {
    std::vector<std::vector<double>> wtab(l_f - l_i + 1);
    for (std::size_t l = l_i; l <= l_f; ++l) wtab[l - l_i] = trapezoid_weights(g, l, l_f);
    return wtab;
}

}  // namespace detail

/// Memory integral of dimension m over the simplex l_i <= s_1 <= ... <= s_m
/// <= l_f, evaluated as m sequential one-dimensional trapezoid sums by
/// threading the quadrature through the cores of the compressed influence
/// functional. The table must hold every propagator inside the window; the
/// (l_i, l_f) entry itself may be a predictor value.
inline Eigen::Matrix2cd eval_integral_tt(const PropagatorTable& table, const BifTT& L, int m,
                                         std::size_t l_i, std::size_t l_f) {
    const LabelGrid& g = table.grid();
    require(m >= 1 && m % 2 == 1, "eval_integral_tt: dimension must be odd");
    require(L.m == m && L.tt.order() == static_cast<std::size_t>(m) + 1,
            "eval_integral_tt: influence functional has the wrong dimension");
    require(L.grid.N == g.N && L.grid.dt == g.dt, "eval_integral_tt: grid mismatch");
    require(g.valid(l_i) && g.valid(l_f) && l_i <= l_f, "eval_integral_tt: bad window");
    if (l_i == l_f) return Eigen::Matrix2cd::Zero();

    const Eigen::Matrix2cd w_op = pauli_z();
    const std::size_t W = l_f - l_i + 1;
    const auto wtab = detail::window_weights(g, l_i, l_f);

    // Innermost level: fix the last core at the window end and fold in the
    // two flip operators around G(s_m, l_f).
    const TTCore& c_last = L.tt.core(static_cast<std::size_t>(m));
    const TTCore& c_m = L.tt.core(static_cast<std::size_t>(m) - 1);
    std::vector<cplx> tail(c_last.rl);
    for (std::size_t a = 0; a < c_last.rl; ++a) tail[a] = c_last(a, g.phys(l_f), 0);

    std::size_t r = c_m.rl;  // bond entering the current level
    std::vector<Eigen::Matrix2cd> omega(W * r);
    for (std::size_t l = l_i; l <= l_f; ++l) {
        const Eigen::Matrix2cd wgw = w_op * table.at(l, l_f) * w_op;
        for (std::size_t a = 0; a < r; ++a) {
            cplx s = 0.0;
            for (std::size_t b = 0; b < c_m.rr; ++b) s += c_m(a, g.phys(l), b) * tail[b];
            omega[(l - l_i) * r + a] = s * wgw;
        }
    }

    std::vector<Eigen::Matrix2cd> acc;
    for (int j = m; j >= 1; --j) {
        // One trapezoid sum per window start; the outermost level only needs
        // the start l_i.
        const std::size_t n_rows = j == 1 ? 1 : W;
        acc.assign(n_rows * r, Eigen::Matrix2cd::Zero());
        for (std::size_t row = 0; row < n_rows; ++row) {
            const std::size_t l = l_i + row;
            const std::vector<double>& w = wtab[l - l_i];
            for (std::size_t lp = l; lp <= l_f; ++lp) {
                const double c = w[lp - l] * g.sign(lp);
                if (c == 0.0) continue;
                const Eigen::Matrix2cd& G = table.at(l, lp);
                for (std::size_t a = 0; a < r; ++a)
                    acc[row * r + a] += c * (omega[(lp - l_i) * r + a] * G);
            }
        }
        if (j == 1) return acc[0];

        // Next level out: contract core j-1 and append a flip operator.
        const TTCore& c_j = L.tt.core(static_cast<std::size_t>(j) - 2);
        const std::size_t r_out = c_j.rl;
        std::vector<Eigen::Matrix2cd> next(W * r_out);
        for (std::size_t l = l_i; l <= l_f; ++l)
            for (std::size_t b = 0; b < r_out; ++b) {
                Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
                for (std::size_t a = 0; a < r; ++a)
                    s += c_j(b, g.phys(l), a) * acc[(l - l_i) * r + a];
                next[(l - l_i) * r_out + b] = s * w_op;
            }
        omega = std::move(next);
        r = r_out;
    }
    return Eigen::Matrix2cd::Zero();  // unreachable
}

/// Same integral by brute-force nested quadrature over all nondecreasing
/// node tuples, with the influence functional summed over pairings per
/// tuple. Serves as the accuracy oracle for the threaded evaluation.
inline Eigen::Matrix2cd eval_integral_direct(const PropagatorTable& table, const TpcMatrix& B,
                                             int m, std::size_t l_i, std::size_t l_f,
                                             std::size_t tuple_guard = 20'000'000) {
    const LabelGrid& g = table.grid();
    require(m >= 1 && m % 2 == 1, "eval_integral_direct: dimension must be odd");
    require(B.N >= g.N && B.dt == g.dt, "eval_integral_direct: correlation grid mismatch");
    require(g.valid(l_i) && g.valid(l_f) && l_i <= l_f, "eval_integral_direct: bad window");
    if (l_i == l_f) return Eigen::Matrix2cd::Zero();

    const std::size_t W = l_f - l_i + 1;
    double tuples = 1.0;
    for (int j = 1; j <= m; ++j) tuples *= static_cast<double>(W + m - j) / j;
    if (tuples > static_cast<double>(tuple_guard))
        throw size_guard_error("eval_integral_direct: tuple count exceeds guard");

    const Eigen::Matrix2cd w_op = pauli_z();
    const auto wtab = detail::window_weights(g, l_i, l_f);
    const auto n = static_cast<std::size_t>(m);
    std::vector<std::size_t> ks(n);
    std::vector<std::ptrdiff_t> signed_ks(n + 1);
    const auto offset = static_cast<std::ptrdiff_t>(g.N);
    signed_ks[n] = static_cast<std::ptrdiff_t>(g.phys(l_f)) - offset;

    Eigen::Matrix2cd total = Eigen::Matrix2cd::Zero();
    const auto descend = [&](auto&& self, std::size_t level, std::size_t l_prev,
                             double coeff) -> void {
        const std::vector<double>& w = wtab[l_prev - l_i];
        for (std::size_t l = l_prev; l <= l_f; ++l) {
            const double c = coeff * w[l - l_prev] * g.sign(l);
            if (c == 0.0) continue;
            ks[level] = l;
            if (level + 1 == n) {
                Eigen::Matrix2cd u = table.at(ks[n - 1], l_f);
                for (std::size_t j = n - 1; j >= 1; --j)
                    u = u * w_op * table.at(ks[j - 1], ks[j]);
                u = u * w_op * table.at(l_i, ks[0]);
                for (std::size_t j = 0; j < n; ++j)
                    signed_ks[j] = static_cast<std::ptrdiff_t>(g.phys(ks[j])) - offset;
                total += (c * bif_dense(B, signed_ks)) * (w_op * u);
            } else {
                self(self, level + 1, l, c);
            }
        }
    };
    descend(descend, 0, l_i, 1.0);
    return total;
}

/// Truncated right-hand side of the propagator equation at cell (l_i, l_f):
/// i H_s G plus the memory integrals up to dimension M with prefactor
/// i^{m+1}. When boundary_G is given it replaces the table entry in the
/// explicit term only; the integrals always read the table.
inline Eigen::Matrix2cd rhs(const PropagatorTable& table, const BifSet& bifs,
                            const SystemParams& sys, int M, std::size_t l_i, std::size_t l_f,
                            const Eigen::Matrix2cd* boundary_G = nullptr) {
    require(M >= 1 && M % 2 == 1, "rhs: truncation cap must be odd");
    const Eigen::Matrix2cd& G = boundary_G != nullptr ? *boundary_G : table.at(l_i, l_f);
    Eigen::Matrix2cd out = iu * (sys.H_s() * G);
    if (bifs.empty() || l_i == l_f) return out;
    for (int m = 1; m <= M; m += 2) {
        const double pref = ((m + 1) / 2) % 2 == 1 ? -1.0 : 1.0;
        out += pref * eval_integral_tt(table, bifs.at(m), m, l_i, l_f);
    }
    return out;
}

struct SolverOptions {
    /// Derive mirror cells as adjoints and make the cells G(-k,k) exactly
    /// Hermitian instead of stepping everything. Requires a Hermitian
    /// observable and switches itself off otherwise; without it the fill is
    /// exactly linear in O_s but mirror pairs agree only to the step error.
    bool reuse_conjugate = true;
    /// Derive same-branch cells from one seed per span instead of stepping
    /// each; exact for any observable.
    bool reuse_shift = true;
    /// Install the predictor everywhere the unknown cell is read. When
    /// false the integrals see the previous cell value and only the
    /// explicit term sees the predictor.
    bool predictor_everywhere = true;
    unsigned threads = 1;

    static SolverOptions independent() {
        SolverOptions opt;
        opt.reuse_conjugate = false;
        opt.reuse_shift = false;
        return opt;
    }
};

namespace detail {

struct HeunStepper {
    PropagatorTable& table;
    const BifSet& bifs;
    const SystemParams& sys;
    int M;
    bool predictor_everywhere;

    void operator()(std::size_t l1, std::size_t l2) const {
        const LabelGrid& g = table.grid();
        require(l2 != g.origin_plus(), "HeunStepper: the origin jump is not a time step");
        const std::size_t prev = l2 - 1;
        const double sgn = g.sign(l2);
        const double dt = g.dt;
        const Eigen::Matrix2cd base = table.at(l1, prev);
        const Eigen::Matrix2cd k1 = rhs(table, bifs, sys, M, l1, prev);
        const Eigen::Matrix2cd pred = base + (sgn * dt) * k1;
        Eigen::Matrix2cd k2;
        if (predictor_everywhere) {
            table.set(l1, l2, pred);
            k2 = rhs(table, bifs, sys, M, l1, l2);
        } else {
            table.set(l1, l2, base);
            k2 = rhs(table, bifs, sys, M, l1, l2, &pred);
        }
        const Eigen::Matrix2cd value = base + (sgn * 0.5 * dt) * (k1 + k2);
        if (!value.allFinite())
            throw numerical_error("solve_propagators: non-finite value at cell (" +
                                  label_name(g, l1) + "," + label_name(g, l2) + ")");
        table.set(l1, l2, value);
    }
};

inline void run_steps(const HeunStepper& step,
                      const std::vector<std::pair<std::size_t, std::size_t>>& cells,
                      unsigned threads) {
    if (threads <= 1 || cells.size() < 2) {
        for (const auto& [l1, l2] : cells) step(l1, l2);
        return;
    }
    const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < cells.size(); i += n) step(cells[i].first,
                                                                      cells[i].second);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// Fill the full propagator table by second-order predictor-corrector
/// stepping in span order. Cells of equal physical span are independent;
/// mirror and shifted copies are derived from computed cells when symmetry
/// reuse is on.
inline PropagatorTable solve_propagators(const SystemParams& sys, const BifSet& bifs,
                                         std::size_t N, int M, double dt,
                                         const SolverOptions& opt = {}) {
    sys.validate();
    require(N >= 1, "solve_propagators: need at least one step");
    require(dt > 0.0, "solve_propagators: step must be positive");
    require(M >= 1 && M % 2 == 1, "solve_propagators: truncation cap must be odd");
    if (!bifs.empty()) {
        require(*bifs.grid() == BifGrid{dt, N}, "solve_propagators: influence grid mismatch");
        for (int m = 1; m <= M; m += 2) (void)bifs.at(m);
    }

    PropagatorTable table(N, dt);
    const LabelGrid& g = table.grid();
    const std::size_t om = g.origin_minus(), op = g.origin_plus();
    for (std::size_t l = 0; l < g.n_labels(); ++l)
        table.set(l, l, Eigen::Matrix2cd::Identity());
    table.set(om, op, sys.O_s);

    const bool hermitian_obs = (sys.O_s - sys.O_s.adjoint()).norm() < 1e-12;
    const bool conj_reuse = opt.reuse_conjugate && hermitian_obs;
    const bool shift_reuse = opt.reuse_shift;
    const detail::HeunStepper step{table, bifs, sys, M, opt.predictor_everywhere};
    const auto ni = static_cast<int>(N);

    for (int p = 1; p <= 2 * ni; ++p) {
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        if (p <= ni) {
            // Branch seeds: one cell per branch when shifts are derived.
            cells.emplace_back(op, g.label_pos(p));
            if (!shift_reuse)
                for (int k = 1; k + p <= ni; ++k)
                    cells.emplace_back(g.label_pos(k), g.label_pos(k + p));
            if (!conj_reuse) {
                cells.emplace_back(g.label_neg(-p), g.label_neg(0));
                if (!shift_reuse)
                    for (int k = 1; k + p <= ni; ++k)
                        cells.emplace_back(g.label_neg(-k - p), g.label_neg(-k));
            }
        }
        for (int a = 1; a < p; ++a) {
            const int b = p - a;
            if (a > ni || b > ni) continue;
            if (!conj_reuse || b >= a) cells.emplace_back(g.label_neg(-a), g.label_pos(b));
        }
        detail::run_steps(step, cells, opt.threads);

        // The exact propagator satisfies G(-t,t) = G(-t,t)^dagger; stepping
        // only preserves that to the truncation order, so project back when
        // mirror symmetry is in force.
        if (conj_reuse && p % 2 == 0 && p / 2 <= ni) {
            const std::size_t lo = g.label_neg(-p / 2), hi = g.label_pos(p / 2);
            const Eigen::Matrix2cd G = table.at(lo, hi);
            table.set(lo, hi, 0.5 * (G + G.adjoint()));
        }

        if (p <= ni) {
            if (shift_reuse) {
                const Eigen::Matrix2cd seed = table.at(op, g.label_pos(p));
                for (int k = 1; k + p <= ni; ++k)
                    table.set(g.label_pos(k), g.label_pos(k + p), seed);
                if (!conj_reuse) {
                    const Eigen::Matrix2cd nseed = table.at(g.label_neg(-p), g.label_neg(0));
                    for (int k = 1; k + p <= ni; ++k)
                        table.set(g.label_neg(-k - p), g.label_neg(-k), nseed);
                }
            }
            if (conj_reuse)
                for (int k = 0; k + p <= ni; ++k)
                    table.set(g.label_neg(-k - p), g.label_neg(-k),
                              table.at(g.label_pos(k), g.label_pos(k + p)).adjoint());
            // Origin jumps are constraints of the scheme, not symmetry reuse:
            // a window through zero reads both one-sided values, so the rows
            // G(0-, .) and columns G(., 0+) always come from the jump
            // relations G(0-,k) = G(0+,k) O_s and G(-k,0+) = O_s G(-k,0-).
            table.set(om, g.label_pos(p), table.at(op, g.label_pos(p)) * sys.O_s);
            table.set(g.label_neg(-p), op, sys.O_s * table.at(g.label_neg(-p), om));
        }
        if (conj_reuse)
            for (int a = 1; a < p; ++a) {
                const int b = p - a;
                if (a > ni || b > ni || b >= a) continue;
                table.set(g.label_neg(-a), g.label_pos(b),
                          table.at(g.label_neg(-b), g.label_pos(a)).adjoint());
            }
    }
    return table;
}

/// Observed convergence order from three traces of one run at steps dt,
/// dt/2, dt/4 (coarse to fine), compared on the coarse nodes.
inline double convergence_order(const std::vector<cplx>& trace_2h,
                                const std::vector<cplx>& trace_h,
                                const std::vector<cplx>& trace_h2) {
    require(trace_2h.size() >= 2, "convergence_order: traces too short");
    require(trace_h.size() == 2 * trace_2h.size() - 1 &&
                trace_h2.size() == 4 * trace_2h.size() - 3,
            "convergence_order: traces do not share the final time");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < trace_2h.size(); ++j) {
        num += std::norm(trace_2h[j] - trace_h[2 * j]);
        den += std::norm(trace_h[2 * j] - trace_h2[4 * j]);
    }
    if (den == 0.0) throw numerical_error("convergence_order: traces coincide");
    return 0.5 * std::log2(num / den);
}

}  // namespace inchtt
