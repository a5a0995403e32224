#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <optional>
#include <utility>

#include "inchtt/dense_tensor.hpp"

namespace inchtt {

using MatrixXc = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<MatrixXc>;
using ConstMapMat = Eigen::Map<const MatrixXc>;

/// One 3-index TT core of shape (r_left, n, r_right), stored row-major with
/// the left bond slowest and the right bond fastest.
struct TTCore {
    std::size_t rl = 1, n = 1, rr = 1;
    std::vector<cplx> a;

    TTCore() = default;
    TTCore(std::size_t rl_, std::size_t n_, std::size_t rr_)
        : rl(rl_), n(n_), rr(rr_), a(rl_ * n_ * rr_, cplx{0.0, 0.0}) {}

    cplx& operator()(std::size_t al, std::size_t i, std::size_t ar) {
        return a[(al * n + i) * rr + ar];
    }
    const cplx& operator()(std::size_t al, std::size_t i, std::size_t ar) const {
        return a[(al * n + i) * rr + ar];
    }

    /// Mode slice i as an r_left x r_right matrix view.
    auto slice(std::size_t i) const {
        return Eigen::Map<const MatrixXc, 0, Eigen::OuterStride<>>(
            a.data() + i * rr, static_cast<Eigen::Index>(rl), static_cast<Eigen::Index>(rr),
            Eigen::OuterStride<>(static_cast<Eigen::Index>(n * rr)));
    }
    auto slice(std::size_t i) {
        return Eigen::Map<MatrixXc, 0, Eigen::OuterStride<>>(
            a.data() + i * rr, static_cast<Eigen::Index>(rl), static_cast<Eigen::Index>(rr),
            Eigen::OuterStride<>(static_cast<Eigen::Index>(n * rr)));
    }

    /// Horizontal unfolding: r_left x (n * r_right).
    ConstMapMat unfold_h() const { return ConstMapMat(a.data(), rl, n * rr); }
    /// Vertical unfolding: (r_left * n) x r_right.
    ConstMapMat unfold_v() const { return ConstMapMat(a.data(), rl * n, rr); }
};

/// Tensor train: ordered list of 3-index complex cores with chained bonds,
/// r_0 = r_d = 1. Immutable by convention after construction; all operations
/// below are pure functions.
class TensorTrain {
public:
    TensorTrain() = default;
    explicit TensorTrain(std::vector<TTCore> cores) : cores_(std::move(cores)) { validate(); }

    std::size_t order() const { return cores_.size(); }
    const std::vector<TTCore>& cores() const { return cores_; }
    const TTCore& core(std::size_t j) const { return cores_.at(j); }
    TTCore& core_mutable(std::size_t j) { return cores_.at(j); }

    std::vector<std::size_t> mode_dims() const {
        std::vector<std::size_t> n(cores_.size());
        for (std::size_t j = 0; j < cores_.size(); ++j) n[j] = cores_[j].n;
        return n;
    }

    /// Bond dimensions r_0..r_d (length d+1).
    std::vector<std::size_t> bond_dims() const {
        std::vector<std::size_t> r(cores_.size() + 1, 1);
        for (std::size_t j = 0; j < cores_.size(); ++j) r[j + 1] = cores_[j].rr;
        return r;
    }

    std::size_t max_bond() const {
        std::size_t r = 1;
        for (const TTCore& c : cores_) r = std::max(r, c.rr);
        return r;
    }

    /// All-zero TT of the given mode dimensions with every bond equal to 1.
    static TensorTrain zeros(const std::vector<std::size_t>& dims) {
        require(!dims.empty(), "TensorTrain: empty mode list");
        std::vector<TTCore> cores;
        cores.reserve(dims.size());
        for (std::size_t n : dims) cores.emplace_back(1, n, 1);
        return TensorTrain(std::move(cores));
    }

    void validate() const {
        require(!cores_.empty(), "TensorTrain: no cores");
        require(cores_.front().rl == 1 && cores_.back().rr == 1,
                "TensorTrain: boundary bonds must be 1");
        for (std::size_t j = 0; j + 1 < cores_.size(); ++j)
            require(cores_[j].rr == cores_[j + 1].rl, "TensorTrain: bond chain mismatch");
        for (const TTCore& c : cores_) {
            require(c.a.size() == c.rl * c.n * c.rr, "TensorTrain: core storage mismatch");
            for (const cplx& v : c.a)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw numerical_error("TensorTrain: non-finite core entry");
        }
    }

private:
    std::vector<TTCore> cores_;
};

/// Element access: chain product of core slices at the multi-index.
inline cplx tt_element(const TensorTrain& X, const std::vector<std::size_t>& idx) {
    require(idx.size() == X.order(), "tt_element: index order mismatch");
    for (std::size_t j = 0; j < idx.size(); ++j)
        if (idx[j] >= X.core(j).n) throw std::out_of_range("tt_element: index out of range");
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Ones(1);
    for (std::size_t j = 0; j < idx.size(); ++j) v = v * X.core(j).slice(idx[j]);
    return v(0);
}

namespace detail {

/// Truncation rank for a singular-value list: smallest r with
/// sqrt(sum_{i>r} sigma_i^2) <= delta, clamped to [1, cap].
inline std::size_t truncation_rank(const Eigen::VectorXd& sv, double delta, std::size_t cap) {
    std::size_t full = static_cast<std::size_t>(sv.size());
    double tail = 0.0;
    std::size_t r = full;
    while (r > 1) {
        double t = tail + sv(static_cast<Eigen::Index>(r - 1)) * sv(static_cast<Eigen::Index>(r - 1));
        if (std::sqrt(t) > delta) break;
        tail = t;
        --r;
    }
    return std::min(r, std::max<std::size_t>(cap, 1));
}

/// Thin SVD with a size-dependent algorithm choice; deterministic.
inline void thin_svd(const MatrixXc& A, MatrixXc& U, Eigen::VectorXd& S, MatrixXc& V) {
    if (std::min(A.rows(), A.cols()) <= 16) {
        Eigen::JacobiSVD<MatrixXc> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        S = svd.singularValues();
        V = svd.matrixV();
    } else {
        Eigen::BDCSVD<MatrixXc> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        S = svd.singularValues();
        V = svd.matrixV();
    }
}

}  // namespace detail

/// TT-SVD of a dense tensor. Bond dimensions are the numerical ranks of the
/// sequential unfoldings; the result satisfies
/// ||dense(result) - T||_F <= tol * ||T||_F via per-unfolding threshold
/// tol * ||T||_F / sqrt(d-1).
inline TensorTrain tt_from_dense(const DenseTensor& T, double tol) {
    require(tol >= 0.0, "tt_from_dense: negative tolerance");
    const std::size_t d = T.order();
    require(d >= 1, "tt_from_dense: empty tensor");
    const double delta = (d > 1) ? tol * T.frobenius_norm() / std::sqrt(double(d - 1)) : 0.0;

    std::vector<TTCore> cores;
    cores.reserve(d);
    MatrixXc cur = ConstMapMat(T.data(), T.dims()[0], T.size() / T.dims()[0]);
    std::size_t rl = 1;
    for (std::size_t j = 0; j + 1 < d; ++j) {
        MatrixXc U, V;
        Eigen::VectorXd S;
        detail::thin_svd(cur, U, S, V);
        std::size_t r = detail::truncation_rank(S, delta, static_cast<std::size_t>(S.size()));
        TTCore c(rl, T.dims()[j], r);
        MapMat(c.a.data(), rl * T.dims()[j], r) = U.leftCols(static_cast<Eigen::Index>(r));
        cores.push_back(std::move(c));
        MatrixXc rest = S.head(static_cast<Eigen::Index>(r)).asDiagonal() *
                        V.leftCols(static_cast<Eigen::Index>(r)).adjoint();
        const std::size_t next_n = T.dims()[j + 1];
        // Row-major reshape (r, cols) -> (r*next_n, cols/next_n) keeps the flat layout.
        cur = MapMat(rest.data(), r * next_n, static_cast<std::size_t>(rest.size()) / (r * next_n));
        rl = r;
    }
    TTCore last(rl, T.dims()[d - 1], 1);
    MapMat(last.a.data(), rl * T.dims()[d - 1], 1) = cur;
    cores.push_back(std::move(last));
    return TensorTrain(std::move(cores));
}

/// Densifies a TT; refused beyond the element-count guard.
inline DenseTensor tt_to_dense(const TensorTrain& X,
                               std::size_t guard = default_size_guard) {
    DenseTensor T(X.mode_dims(), guard);
    const std::size_t d = X.order();
    // Left-to-right contraction: B has shape (prefix_count, r_j); appending a
    // mode is one matrix product against the horizontal unfolding.
    MatrixXc B = MatrixXc::Ones(1, 1);
    for (std::size_t j = 0; j < d; ++j) {
        const TTCore& c = X.core(j);
        MatrixXc wide = B * c.unfold_h();  // (P, n*rr), row-major
        B = MapMat(wide.data(), static_cast<std::size_t>(wide.rows()) * c.n, c.rr);
    }
    for (std::size_t f = 0; f < T.size(); ++f) T[f] = B(static_cast<Eigen::Index>(f), 0);
    return T;
}

/// Elementwise sum via block-diagonal cores; internal bonds add.
inline TensorTrain tt_sum(const TensorTrain& X, const TensorTrain& Y) {
    require(X.mode_dims() == Y.mode_dims(), "tt_sum: mode dimensions differ");
    const std::size_t d = X.order();
    if (d == 1) {
        TTCore c = X.core(0);
        for (std::size_t k = 0; k < c.a.size(); ++k) c.a[k] += Y.core(0).a[k];
        return TensorTrain({std::move(c)});
    }
    std::vector<TTCore> cores;
    cores.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
        const TTCore& x = X.core(j);
        const TTCore& y = Y.core(j);
        const std::size_t rl = (j == 0) ? 1 : x.rl + y.rl;
        const std::size_t rr = (j + 1 == d) ? 1 : x.rr + y.rr;
        TTCore z(rl, x.n, rr);
        for (std::size_t i = 0; i < x.n; ++i) {
            auto zs = z.slice(i);
            if (j == 0) {
                zs.leftCols(static_cast<Eigen::Index>(x.rr)) = x.slice(i);
                zs.rightCols(static_cast<Eigen::Index>(y.rr)) = y.slice(i);
            } else if (j + 1 == d) {
                zs.topRows(static_cast<Eigen::Index>(x.rl)) = x.slice(i);
                zs.bottomRows(static_cast<Eigen::Index>(y.rl)) = y.slice(i);
            } else {
                zs.topLeftCorner(static_cast<Eigen::Index>(x.rl), static_cast<Eigen::Index>(x.rr)) =
                    x.slice(i);
                zs.bottomRightCorner(static_cast<Eigen::Index>(y.rl),
                                     static_cast<Eigen::Index>(y.rr)) = y.slice(i);
            }
        }
        cores.push_back(std::move(z));
    }
    return TensorTrain(std::move(cores));
}

/// Elementwise (Hadamard) product; core slices multiply as Kronecker
/// products, so internal bonds multiply.
inline TensorTrain tt_hadamard(const TensorTrain& X, const TensorTrain& Y) {
    require(X.mode_dims() == Y.mode_dims(), "tt_hadamard: mode dimensions differ");
    const std::size_t d = X.order();
    std::vector<TTCore> cores;
    cores.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
        const TTCore& x = X.core(j);
        const TTCore& y = Y.core(j);
        TTCore z(x.rl * y.rl, x.n, x.rr * y.rr);
        for (std::size_t i = 0; i < x.n; ++i)
            for (std::size_t ax = 0; ax < x.rl; ++ax)
                for (std::size_t bx = 0; bx < x.rr; ++bx) {
                    const cplx xv = x(ax, i, bx);
                    if (xv == cplx{0.0, 0.0}) continue;
                    for (std::size_t ay = 0; ay < y.rl; ++ay)
                        for (std::size_t by = 0; by < y.rr; ++by)
                            z(ax * y.rl + ay, i, bx * y.rr + by) = xv * y(ay, i, by);
                }
        cores.push_back(std::move(z));
    }
    return TensorTrain(std::move(cores));
}

/// Index extension TT(X, D, positions): keeps X's cores at the given 1-based
/// positions and inserts identity-carrying cores (delta_{alpha,beta} per mode
/// slice) elsewhere. new_mode_dims gives the mode size of every position in
/// 1..D; kept slots must match X's modes.
inline TensorTrain tt_extend(const TensorTrain& X, std::size_t D,
                             const std::vector<std::size_t>& positions,
                             const std::vector<std::size_t>& new_mode_dims) {
    const std::size_t d = X.order();
    require(positions.size() == d, "tt_extend: positions length must equal order of X");
    require(new_mode_dims.size() == D, "tt_extend: new_mode_dims length must equal D");
    for (std::size_t l = 0; l < d; ++l) {
        require(positions[l] >= 1 && positions[l] <= D, "tt_extend: position out of range");
        if (l > 0) require(positions[l] > positions[l - 1], "tt_extend: positions must strictly increase");
        require(new_mode_dims[positions[l] - 1] == X.core(l).n,
                "tt_extend: kept position mode mismatch");
    }
    std::vector<TTCore> cores;
    cores.reserve(D);
    std::size_t next = 0;  // next core of X to place
    std::size_t carry = 1; // bond carried through inserted cores
    for (std::size_t p = 1; p <= D; ++p) {
        if (next < d && positions[next] == p) {
            cores.push_back(X.core(next));
            carry = X.core(next).rr;
            ++next;
        } else {
            TTCore c(carry, new_mode_dims[p - 1], carry);
            for (std::size_t i = 0; i < c.n; ++i)
                for (std::size_t al = 0; al < carry; ++al) c(al, i, al) = cplx{1.0, 0.0};
            cores.push_back(std::move(c));
        }
    }
    return TensorTrain(std::move(cores));
}

/// Rounding policy: tolerance eta (relative Frobenius bound), bond cap R, or
/// both; none() reproduces the input up to orthogonalization round-off.
struct RoundingPolicy {
    std::optional<double> tol;
    std::optional<std::size_t> max_bond;

    static RoundingPolicy none() { return {}; }
    static RoundingPolicy tolerance(double eta) {
        require(eta >= 0.0, "RoundingPolicy: negative tolerance");
        return {eta, std::nullopt};
    }
    static RoundingPolicy bond_cap(std::size_t R) {
        require(R >= 1, "RoundingPolicy: bond cap must be >= 1");
        return {std::nullopt, R};
    }
};

/// TT rounding: right-to-left orthogonalization sweep, then left-to-right
/// truncated-SVD sweep with per-bond threshold eta*||X||_F/sqrt(d-1) and/or
/// the bond cap.
inline TensorTrain tt_round(const TensorTrain& X, const RoundingPolicy& policy) {
    const std::size_t d = X.order();
    std::vector<TTCore> cores = X.cores();
    if (d == 1) return TensorTrain(std::move(cores));

    // Right-to-left: LQ-orthogonalize each core, pushing the L factor left.
    for (std::size_t j = d - 1; j >= 1; --j) {
        TTCore& c = cores[j];
        MatrixXc H = ConstMapMat(c.a.data(), c.rl, c.n * c.rr);
        Eigen::HouseholderQR<MatrixXc> qr(H.adjoint());
        const std::size_t k = std::min(c.rl, c.n * c.rr);
        MatrixXc Q = qr.householderQ() * MatrixXc::Identity(static_cast<Eigen::Index>(c.n * c.rr),
                                                            static_cast<Eigen::Index>(k));
        MatrixXc R = qr.matrixQR()
                         .topRows(static_cast<Eigen::Index>(k))
                         .template triangularView<Eigen::Upper>();
        TTCore nc(k, c.n, c.rr);
        MapMat(nc.a.data(), k, c.n * c.rr) = Q.adjoint();
        // Push L = R^dagger into the right bond of core j-1.
        TTCore& p = cores[j - 1];
        TTCore np(p.rl, p.n, k);
        MapMat(np.a.data(), p.rl * p.n, k) =
            ConstMapMat(p.a.data(), p.rl * p.n, p.rr) * R.adjoint();
        cores[j] = std::move(nc);
        cores[j - 1] = std::move(np);
    }

    const double norm = ConstMapMat(cores[0].a.data(), 1, cores[0].a.size()).norm();
    const double delta = policy.tol ? (*policy.tol * norm / std::sqrt(double(d - 1))) : 0.0;
    const std::size_t cap = policy.max_bond ? *policy.max_bond : SIZE_MAX;

    // Left-to-right: truncated SVD per bond, pushing S*V^dagger right.
    for (std::size_t j = 0; j + 1 < d; ++j) {
        TTCore& c = cores[j];
        MatrixXc U, V;
        Eigen::VectorXd S;
        detail::thin_svd(ConstMapMat(c.a.data(), c.rl * c.n, c.rr), U, S, V);
        const std::size_t r = detail::truncation_rank(S, delta, cap);
        TTCore nc(c.rl, c.n, r);
        MapMat(nc.a.data(), c.rl * c.n, r) = U.leftCols(static_cast<Eigen::Index>(r));
        MatrixXc carry = S.head(static_cast<Eigen::Index>(r)).asDiagonal() *
                         V.leftCols(static_cast<Eigen::Index>(r)).adjoint();
        TTCore& nxt = cores[j + 1];
        TTCore nn(r, nxt.n, nxt.rr);
        MapMat(nn.a.data(), r, nxt.n * nxt.rr) =
            carry * ConstMapMat(nxt.a.data(), nxt.rl, nxt.n * nxt.rr);
        cores[j] = std::move(nc);
        cores[j + 1] = std::move(nn);
    }
    return TensorTrain(std::move(cores));
}

/// Frobenius norm via core-wise Gram accumulation; no densification.
inline double tt_frobenius_norm(const TensorTrain& X) {
    MatrixXc g = MatrixXc::Ones(1, 1);
    for (std::size_t j = 0; j < X.order(); ++j) {
        const TTCore& c = X.core(j);
        MatrixXc next = MatrixXc::Zero(static_cast<Eigen::Index>(c.rr),
                                       static_cast<Eigen::Index>(c.rr));
        for (std::size_t i = 0; i < c.n; ++i) next += c.slice(i).adjoint() * g * c.slice(i);
        g = std::move(next);
    }
    return std::sqrt(std::max(0.0, g(0, 0).real()));
}

/// Multiplies the first core by the scalar.
inline TensorTrain tt_scale(const TensorTrain& X, cplx factor) {
    std::vector<TTCore> cores = X.cores();
    for (cplx& v : cores[0].a) v *= factor;
    return TensorTrain(std::move(cores));
}

}  // namespace inchtt
