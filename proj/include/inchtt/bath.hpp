#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "inchtt/tensor_train.hpp"

namespace inchtt {

/// Discrete harmonic bath: strictly increasing frequencies with nonnegative
/// couplings, both dimensionless.
struct BathModes {
    std::vector<double> frequencies;
    std::vector<double> couplings;

    void validate() const {
        require(!frequencies.empty() && frequencies.size() == couplings.size(),
                "BathModes: mismatched or empty mode lists");
        double prev = 0.0;
        for (double w : frequencies) {
            require(w > prev, "BathModes: frequencies must be positive and strictly increasing");
            prev = w;
        }
        for (double c : couplings) require(c >= 0.0, "BathModes: negative coupling");
    }
};

struct BathParams {
    double beta = 5.0;      // inverse temperature
    double xi = 0.2;        // Kondo parameter
    std::size_t L = 400;    // number of bath modes
    double omega_c = 2.5;   // primary frequency
    double omega_max = 10.0;// frequency cutoff
    double dt = 0.1;        // time step
    std::size_t N = 10;     // half grid size

    void validate() const {
        require(beta > 0.0, "BathParams: beta must be positive");
        require(xi >= 0.0, "BathParams: xi must be nonnegative");
        require(L >= 1, "BathParams: need at least one mode");
        require(omega_c > 0.0 && omega_max > omega_c, "BathParams: need omega_max > omega_c > 0");
        require(dt > 0.0, "BathParams: dt must be positive");
        require(N >= 1, "BathParams: N must be at least 1");
    }
};

/// Logarithmic Ohmic discretization:
/// omega_l = -omega_c ln(1 - (l/L)(1 - e^{-omega_max/omega_c})),
/// c_l = omega_l sqrt(xi omega_c (1 - e^{-omega_max/omega_c}) / L).
inline BathModes ohmic_discretize(const BathParams& p) {
    p.validate();
    BathModes modes;
    modes.frequencies.resize(p.L);
    modes.couplings.resize(p.L);
    const double span = 1.0 - std::exp(-p.omega_max / p.omega_c);
    for (std::size_t l = 1; l <= p.L; ++l) {
        const double w = -p.omega_c * std::log(1.0 - (double(l) / double(p.L)) * span);
        modes.frequencies[l - 1] = w;
        modes.couplings[l - 1] = w * std::sqrt(p.xi * p.omega_c * span / double(p.L));
    }
    modes.validate();
    return modes;
}

namespace detail {

/// coth(x) for x > 0 without overflow: 1 + 2/expm1(2x).
inline double coth_positive(double x) { return 1.0 + 2.0 / std::expm1(2.0 * x); }

/// Kernel at a signed time difference dtau:
/// sum_l (c_l^2 / 2 omega_l) [coth(beta omega_l / 2) cos(omega_l dtau) - i sin(omega_l dtau)].
inline cplx tpc_kernel(const BathModes& modes, double beta, double dtau) {
    double re = 0.0, im = 0.0;
    for (std::size_t l = 0; l < modes.frequencies.size(); ++l) {
        const double w = modes.frequencies[l];
        const double c2 = modes.couplings[l] * modes.couplings[l];
        if (c2 == 0.0) continue;
        const double amp = c2 / (2.0 * w);
        re += amp * coth_positive(beta * w / 2.0) * std::cos(w * dtau);
        im -= amp * std::sin(w * dtau);
    }
    return {re, im};
}

}  // namespace detail

/// Two-point correlation B(tau1, tau2) evaluated at dtau = |tau1| - |tau2|.
inline cplx tpc_value(const BathModes& modes, double beta, double tau1, double tau2) {
    require(beta > 0.0, "tpc_value: beta must be positive");
    return detail::tpc_kernel(modes, beta, std::abs(tau1) - std::abs(tau2));
}

/// TPC matrix on the (2N+1)^2 grid, indexed by k1, k2 in -N..N via offset N.
/// Entries depend only on |k1| - |k2|, which keeps the fill O(N L).
struct TpcMatrix {
    Eigen::MatrixXcd values;
    std::size_t N = 0;
    double dt = 0.0;

    cplx at(std::ptrdiff_t k1, std::ptrdiff_t k2) const {
        return values(k1 + static_cast<std::ptrdiff_t>(N), k2 + static_cast<std::ptrdiff_t>(N));
    }
};

inline TpcMatrix tpc_matrix(const BathModes& modes, double beta, double dt, std::size_t N) {
    modes.validate();
    require(beta > 0.0 && dt > 0.0 && N >= 1, "tpc_matrix: invalid grid parameters");
    const std::size_t n = 2 * N + 1;
    // Distinct values over dk = |k1| - |k2| in -N..N.
    std::vector<cplx> line(2 * N + 1);
    for (std::size_t j = 0; j < line.size(); ++j) {
        const double dtau = (static_cast<double>(j) - static_cast<double>(N)) * dt;
        line[j] = detail::tpc_kernel(modes, beta, dtau);
    }
    TpcMatrix B;
    B.N = N;
    B.dt = dt;
    B.values.resize(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto a = std::abs(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(N));
            const auto b = std::abs(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(N));
            B.values(i, j) = line[static_cast<std::size_t>(a - b + static_cast<std::ptrdiff_t>(N))];
        }
    return B;
}

/// Fixed-frequency TPC matrix (Lemma 1 fixture):
/// entries coth(beta omega / 2) cos(omega dk dt) - i sin(omega dk dt).
inline Eigen::MatrixXcd fixed_freq_matrix(double omega, double beta, double dt, std::size_t N) {
    require(omega != 0.0, "fixed_freq_matrix: omega must be nonzero");
    require(beta > 0.0 && dt > 0.0, "fixed_freq_matrix: invalid parameters");
    const double lam = omega > 0.0 ? detail::coth_positive(beta * omega / 2.0)
                                   : -detail::coth_positive(-beta * omega / 2.0);
    const std::size_t n = 2 * N + 1;
    Eigen::MatrixXcd M(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto a = std::abs(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(N));
            const auto b = std::abs(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(N));
            const double th = omega * static_cast<double>(a - b) * dt;
            M(i, j) = cplx{lam * std::cos(th), -std::sin(th)};
        }
    return M;
}

/// Truncated-SVD two-core factorization of the TPC matrix. Rank 0 (decoupled
/// bath) is represented by all-zero rank-1 cores with rank recorded as 0.
struct TpcFactorization {
    TensorTrain tt;                  // two cores, modes (2N+1, 2N+1)
    std::size_t rank = 0;
    Eigen::VectorXd singular_values; // all values of B, untruncated
};

inline TpcFactorization tpc_factorize(const TpcMatrix& B, double threshold) {
    require(threshold > 0.0 && threshold < 1.0, "tpc_factorize: threshold must be in (0,1)");
    const std::size_t n = 2 * B.N + 1;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(B.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw numerical_error("tpc_factorize: SVD failed");
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    std::size_t r = 0;
    while (r < static_cast<std::size_t>(sv.size()) &&
           sv(static_cast<Eigen::Index>(r)) > threshold * smax && sv(static_cast<Eigen::Index>(r)) > 0.0)
        ++r;

    TpcFactorization F;
    F.rank = r;
    F.singular_values = sv;
    if (r == 0) {
        F.tt = TensorTrain::zeros({n, n});
        return F;
    }
    TTCore c1(1, n, r), c2(r, n, 1);
    // B ~ (U sqrt(S)) (sqrt(S) V^dagger), split symmetrically.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < r; ++a) {
            const double s = std::sqrt(sv(static_cast<Eigen::Index>(a)));
            c1(0, i, a) = svd.matrixU()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) * s;
            c2(a, i, 0) =
                std::conj(svd.matrixV()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a))) * s;
        }
    F.tt = TensorTrain({std::move(c1), std::move(c2)});
    return F;
}

}  // namespace inchtt
