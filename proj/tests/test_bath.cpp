#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "inchtt/bath.hpp"
#include "test_helpers.hpp"

using namespace inchtt;

namespace {

Eigen::MatrixXcd dense_from_two_cores(const TensorTrain& tt) {
    REQUIRE(tt.order() == 2);
    const auto n1 = tt.core(0).n;
    const auto n2 = tt.core(1).n;
    Eigen::MatrixXcd M(n1, n2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tt_element(tt, {i, j});
    return M;
}

std::size_t numerical_rank(const Eigen::MatrixXcd& M, double rel_tol) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    std::size_t r = 0;
    while (r < static_cast<std::size_t>(sv.size()) && sv(static_cast<Eigen::Index>(r)) > rel_tol * sv(0)) ++r;
    return r;
}

// Smooth spectral weight used by the quadrature-order fixture.
double ohmic_weight(double w, double wc) { return w * std::exp(-w / wc); }

}  // namespace

TEST_CASE("single-mode correlation matches the closed form") {
    BathModes one;
    one.frequencies = {2.0};
    one.couplings = {0.7};
    const double beta = 2.5;
    const double t1 = 0.3, t2 = -0.1;
    const double dtau = std::abs(t1) - std::abs(t2);  // 0.2
    const double amp = 0.7 * 0.7 / (2.0 * 2.0);
    const double lam = std::cosh(beta * 2.0 / 2.0) / std::sinh(beta * 2.0 / 2.0);
    const cplx expect{amp * lam * std::cos(2.0 * dtau), -amp * std::sin(2.0 * dtau)};
    const cplx got = tpc_value(one, beta, t1, t2);
    CHECK(std::abs(got - expect) < 1e-14);

    // Signed time difference: swapping arguments conjugates the value.
    CHECK(std::abs(tpc_value(one, beta, t2, t1) - std::conj(got)) < 1e-15);
}

TEST_CASE("coth evaluation is stable for large arguments") {
    CHECK(std::abs(detail::coth_positive(0.3) - std::cosh(0.3) / std::sinh(0.3)) < 1e-14);
    CHECK(std::abs(detail::coth_positive(20.0) - 1.0) < 1e-15);
    const double huge = detail::coth_positive(500.0);
    CHECK(std::isfinite(huge));
    CHECK(huge == 1.0);
}

TEST_CASE("logarithmic discretization hits the cutoff and scales couplings") {
    BathParams p;  // defaults: L=400, omega_c=2.5, omega_max=10
    const BathModes modes = ohmic_discretize(p);
    REQUIRE(modes.frequencies.size() == 400);
    CHECK(std::abs(modes.frequencies.back() - p.omega_max) < 1e-12);
    for (std::size_t l = 1; l < modes.frequencies.size(); ++l)
        CHECK(modes.frequencies[l] > modes.frequencies[l - 1]);

    const double span = 1.0 - std::exp(-p.omega_max / p.omega_c);
    const double w1 = -p.omega_c * std::log(1.0 - span / 400.0);
    CHECK(std::abs(modes.frequencies[0] - w1) < 1e-14);
    CHECK(std::abs(modes.couplings[0] - w1 * std::sqrt(p.xi * p.omega_c * span / 400.0)) < 1e-14);

    SECTION("parameter validation") {
        BathParams bad = p;
        bad.omega_max = bad.omega_c;
        CHECK_THROWS_AS(ohmic_discretize(bad), std::invalid_argument);
        bad = p;
        bad.beta = 0.0;
        CHECK_THROWS_AS(ohmic_discretize(bad), std::invalid_argument);
        bad = p;
        bad.L = 0;
        CHECK_THROWS_AS(ohmic_discretize(bad), std::invalid_argument);
    }
}

TEST_CASE("correlation scales linearly in the coupling strength") {
    BathParams p;
    p.L = 30;
    p.xi = 0.2;
    const BathModes m1 = ohmic_discretize(p);
    p.xi = 0.6;
    const BathModes m3 = ohmic_discretize(p);
    for (double tau : {0.0, 0.35, -1.2}) {
        const cplx a = tpc_value(m1, p.beta, tau, 0.1);
        const cplx b = tpc_value(m3, p.beta, tau, 0.1);
        CHECK(std::abs(b - 3.0 * a) < 1e-13 * std::abs(b));
    }
}

TEST_CASE("grid matrix agrees with pointwise evaluation and its symmetries") {
    BathParams p;
    p.L = 7;
    p.N = 5;
    p.dt = 0.25;
    const BathModes modes = ohmic_discretize(p);
    const TpcMatrix B = tpc_matrix(modes, p.beta, p.dt, p.N);
    REQUIRE(B.values.rows() == 11);

    for (std::ptrdiff_t k1 = -5; k1 <= 5; ++k1)
        for (std::ptrdiff_t k2 = -5; k2 <= 5; ++k2) {
            const cplx direct = tpc_value(modes, p.beta, double(k1) * p.dt, double(k2) * p.dt);
            CHECK(std::abs(B.at(k1, k2) - direct) < 1e-14);
            // Hermitian in the pair and invariant under reflecting either index.
            CHECK(std::abs(B.at(k1, k2) - std::conj(B.at(k2, k1))) < 1e-15);
            CHECK(std::abs(B.at(k1, k2) - B.at(-k1, k2)) < 1e-15);
            CHECK(std::abs(B.at(k1, k2) - B.at(k1, -k2)) < 1e-15);
        }
}

TEST_CASE("single-frequency grid matrix has the explicit rank-2 form") {
    const double omega = 1.3, beta = 2.0, dt = 0.2;
    const std::size_t N = 6;
    const Eigen::MatrixXcd M = fixed_freq_matrix(omega, beta, dt, N);
    const std::size_t n = 2 * N + 1;

    const double lam = 1.0 / std::tanh(beta * omega / 2.0);
    const cplx phi = std::exp(cplx{0.0, omega * dt});
    Eigen::VectorXcd x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(double(i) - double(N));
        x(static_cast<Eigen::Index>(i)) = std::pow(phi, a);
        y(static_cast<Eigen::Index>(i)) = std::pow(phi, -a);
    }
    const Eigen::MatrixXcd R =
        0.5 * (lam - 1.0) * (x * x.adjoint()) + 0.5 * (lam + 1.0) * (y * y.adjoint());
    CHECK((M - R).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(numerical_rank(M, 1e-10) == 2);

    CHECK_THROWS_AS(fixed_freq_matrix(0.0, beta, dt, N), std::invalid_argument);
}

TEST_CASE("single-frequency matrix degenerates to rank 1 at low temperature") {
    const Eigen::MatrixXcd M = fixed_freq_matrix(2.0, 25.0, 0.2, 8);  // beta*omega = 50
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    REQUIRE(sv.size() >= 2);
    CHECK(sv(1) / sv(0) < 1e-8);
}

TEST_CASE("grid-matrix rank respects the structural bound") {
    const double beta = 5.0, dt = 0.2;
    for (std::size_t L : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{400}}) {
        BathParams p;
        p.L = L;
        p.dt = dt;
        p.N = 10;
        const BathModes modes = ohmic_discretize(p);
        const TpcMatrix B = tpc_matrix(modes, beta, dt, p.N);
        const std::size_t bound = std::min(p.N + 1, 2 * L);
        CHECK(numerical_rank(B.values, 1e-10) <= bound);
    }
}

TEST_CASE("grid-matrix rank tracks the physical time horizon") {
    // Same horizon N*dt = 4 resolved three ways: ranks stay within a +-2 band.
    const double beta = 5.0;
    std::vector<std::size_t> ranks;
    for (auto [N, dt] : std::vector<std::pair<std::size_t, double>>{{40, 0.1}, {20, 0.2}, {10, 0.4}}) {
        BathParams p;
        p.N = N;
        p.dt = dt;
        const BathModes modes = ohmic_discretize(p);
        const TpcFactorization F = tpc_factorize(tpc_matrix(modes, beta, dt, N), 1e-6);
        ranks.push_back(F.rank);
    }
    const auto [lo, hi] = std::minmax_element(ranks.begin(), ranks.end());
    CHECK(*hi - *lo <= 2);
}

TEST_CASE("midpoint cell rule for the frequency integral is third-order accurate") {
    // One discretization cell [a, a+h]: integral of J(w) * M(w) dw versus the
    // midpoint value h * J(wm) * M(wm). The reference is composite Simpson with
    // enough panels that its own error is negligible against O(h^3).
    const double beta = 5.0, dt = 0.2, wc = 2.5;
    const std::size_t N = 16;
    const double a = 1.0;
    const auto integrand = [&](double w) -> Eigen::MatrixXcd {
        return ohmic_weight(w, wc) * fixed_freq_matrix(w, beta, dt, N);
    };

    std::vector<double> widths{0.4, 0.2, 0.1, 0.05};
    std::vector<double> errs;
    for (double h : widths) {
        const std::size_t panels = 256;
        const double step = h / double(panels);
        Eigen::MatrixXcd exact = Eigen::MatrixXcd::Zero(2 * N + 1, 2 * N + 1);
        for (std::size_t j = 0; j < panels; ++j) {
            const double l = a + double(j) * step;
            exact += (step / 6.0) *
                     (integrand(l) + 4.0 * integrand(l + step / 2.0) + integrand(l + step));
        }
        const Eigen::MatrixXcd mid = h * integrand(a + h / 2.0);
        errs.push_back((exact - mid).norm());
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const double x = std::log(widths[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nfit = double(widths.size());
    const double slope = (nfit * sxy - sx * sy) / (nfit * sxx - sx * sx);
    INFO("fitted order " << slope);
    CHECK(slope >= 2.7);
}

TEST_CASE("two-core factorization reproduces the matrix at its recorded rank") {
    BathParams p;
    p.L = 25;
    p.N = 8;
    p.dt = 0.2;
    const BathModes modes = ohmic_discretize(p);
    const TpcMatrix B = tpc_matrix(modes, p.beta, p.dt, p.N);
    const TpcFactorization F = tpc_factorize(B, 1e-13);

    REQUIRE(F.tt.order() == 2);
    CHECK(F.tt.bond_dims()[1] == F.rank);
    CHECK(F.rank <= std::min(p.N + 1, 2 * p.L));
    CHECK(F.rank >= 2);

    const Eigen::MatrixXcd R = dense_from_two_cores(F.tt);
    CHECK((R - B.values).norm() < 1e-10 * B.values.norm());

    SECTION("tighter threshold keeps at least as many modes") {
        const TpcFactorization loose = tpc_factorize(B, 1e-4);
        CHECK(loose.rank <= F.rank);
        const Eigen::MatrixXcd Rl = dense_from_two_cores(loose.tt);
        CHECK((Rl - B.values).norm() < 10 * 1e-4 * B.values.norm());
    }

    SECTION("threshold validation") {
        CHECK_THROWS_AS(tpc_factorize(B, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(tpc_factorize(B, 1.5), std::invalid_argument);
    }
}

TEST_CASE("decoupled bath factorizes to rank zero") {
    BathParams p;
    p.L = 10;
    p.xi = 0.0;
    p.N = 4;
    const BathModes modes = ohmic_discretize(p);
    const TpcMatrix B = tpc_matrix(modes, p.beta, p.dt, p.N);
    CHECK(B.values.norm() == 0.0);
    const TpcFactorization F = tpc_factorize(B, 1e-10);
    CHECK(F.rank == 0);
    CHECK(tt_frobenius_norm(F.tt) == 0.0);
    CHECK(F.tt.mode_dims() == std::vector<std::size_t>{9, 9});
}
