#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "inchtt/tensor_train.hpp"
#include "inchtt/tt_io.hpp"
#include "test_helpers.hpp"

using namespace inchtt;
using testutil::random_dense;
using testutil::random_tt;
using testutil::rel_dist;

namespace {

TensorTrain ones_tt(const std::vector<std::size_t>& dims) {
    std::vector<TTCore> cores;
    for (std::size_t n : dims) {
        TTCore c(1, n, 1);
        for (cplx& v : c.a) v = 1.0;
        cores.push_back(std::move(c));
    }
    return TensorTrain(std::move(cores));
}

}  // namespace

TEST_CASE("tt_element on rank-1 all-ones train") {
    TensorTrain X = ones_tt({2, 3, 2});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                REQUIRE(tt_element(X, {i, j, k}) == cplx{1.0, 0.0});
    REQUIRE_THROWS_AS(tt_element(X, {2, 0, 0}), std::out_of_range);
    REQUIRE_THROWS_AS(tt_element(X, {0, 0}), std::invalid_argument);
}

TEST_CASE("tt_from_dense reproduces the dense tensor elementwise") {
    std::mt19937 rng(7);
    DenseTensor T = random_dense({4, 4, 4}, rng);
    TensorTrain X = tt_from_dense(T, 1e-14);
    for (std::size_t f = 0; f < T.size(); ++f) {
        auto idx = T.unflatten(f);
        REQUIRE(std::abs(tt_element(X, idx) - T.at(idx)) < 1e-12);
    }
}

TEST_CASE("tt_from_dense of an outer product has unit bonds") {
    std::mt19937 rng(11);
    std::vector<cplx> u(3), v(4), w(2);
    for (auto* vec : {&u, &v, &w})
        for (cplx& x : *vec) x = testutil::random_cplx(rng);
    DenseTensor T({3, 4, 2});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 2; ++k) T.at({i, j, k}) = u[i] * v[j] * w[k];
    TensorTrain X = tt_from_dense(T, 1e-12);
    REQUIRE(X.bond_dims() == std::vector<std::size_t>{1, 1, 1, 1});
    REQUIRE(rel_dist(tt_to_dense(X), T) < 1e-13);
}

TEST_CASE("tt_from_dense of the zero tensor") {
    DenseTensor T({3, 3, 3});
    TensorTrain X = tt_from_dense(T, 1e-12);
    REQUIRE(tt_frobenius_norm(X) == 0.0);
    REQUIRE(X.max_bond() == 1);
}

TEST_CASE("tt_to_dense round trip is exact at tol 0") {
    std::mt19937 rng(13);
    DenseTensor T = random_dense({3, 2, 4, 2}, rng);
    REQUIRE(rel_dist(tt_to_dense(tt_from_dense(T, 0.0)), T) < 1e-13);
}

TEST_CASE("tt_to_dense refuses beyond the size guard") {
    TensorTrain X = ones_tt({100, 100, 100});
    REQUIRE_THROWS_AS(tt_to_dense(X, 100000), size_guard_error);
}

TEST_CASE("tt_sum adds internal bonds and matches the dense sum") {
    std::mt19937 rng(17);
    TensorTrain X = random_tt({3, 3}, {2}, rng);
    TensorTrain Y = random_tt({3, 3}, {3}, rng);
    TensorTrain Z = tt_sum(X, Y);
    REQUIRE(Z.bond_dims() == std::vector<std::size_t>{1, 5, 1});

    DenseTensor dx = tt_to_dense(X), dy = tt_to_dense(Y), dz = tt_to_dense(Z);
    for (std::size_t f = 0; f < dz.size(); ++f)
        REQUIRE(std::abs(dz[f] - (dx[f] + dy[f])) < 1e-13);

    TensorTrain zero = TensorTrain::zeros({3, 3});
    REQUIRE(rel_dist(tt_to_dense(tt_sum(X, zero)), dx) < 1e-13);

    REQUIRE_THROWS_AS(tt_sum(X, ones_tt({3, 4})), std::invalid_argument);
}

TEST_CASE("tt_element of a sum is the sum of elements") {
    std::mt19937 rng(19);
    TensorTrain X = random_tt({2, 3, 2}, {2, 2}, rng);
    TensorTrain Y = random_tt({2, 3, 2}, {3, 2}, rng);
    TensorTrain Z = tt_sum(X, Y);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 2; ++k) {
                std::vector<std::size_t> idx{i, j, k};
                REQUIRE(std::abs(tt_element(Z, idx) - tt_element(X, idx) - tt_element(Y, idx)) <
                        1e-13);
            }
}

TEST_CASE("tt_hadamard multiplies bonds and matches the dense product") {
    std::mt19937 rng(23);
    TensorTrain X = random_tt({3, 3}, {2}, rng);
    TensorTrain Y = random_tt({3, 3}, {3}, rng);
    TensorTrain Z = tt_hadamard(X, Y);
    REQUIRE(Z.bond_dims() == std::vector<std::size_t>{1, 6, 1});

    DenseTensor dx = tt_to_dense(X), dy = tt_to_dense(Y), dz = tt_to_dense(Z);
    for (std::size_t f = 0; f < dz.size(); ++f)
        REQUIRE(std::abs(dz[f] - dx[f] * dy[f]) < 1e-13);

    TensorTrain W = random_tt({2, 2, 2}, {2, 3}, rng);
    REQUIRE(rel_dist(tt_to_dense(tt_hadamard(ones_tt({2, 2, 2}), W)), tt_to_dense(W)) < 1e-13);
}

TEST_CASE("tt_extend keeps elements and inserts identity-carrying cores") {
    std::mt19937 rng(29);
    TensorTrain B = random_tt({4, 4}, {3}, rng);

    SECTION("identity extension") {
        TensorTrain Y = tt_extend(B, 2, {1, 2}, {4, 4});
        REQUIRE(rel_dist(tt_to_dense(Y), tt_to_dense(B)) < 1e-14);
    }

    SECTION("TT(B, 4, [1,3]) repeats B over the inserted modes") {
        TensorTrain Y = tt_extend(B, 4, {1, 3}, {4, 4, 4, 4});
        // Inserted cores carry the bond present at their gap.
        REQUIRE(Y.bond_dims() == std::vector<std::size_t>{1, 3, 3, 1, 1});
        DenseTensor db = tt_to_dense(B);
        for (std::size_t i1 = 0; i1 < 4; ++i1)
            for (std::size_t i2 = 0; i2 < 4; ++i2)
                for (std::size_t i3 = 0; i3 < 4; ++i3)
                    for (std::size_t i4 = 0; i4 < 4; ++i4)
                        REQUIRE(std::abs(tt_element(Y, {i1, i2, i3, i4}) - db.at({i1, i3})) <
                                1e-13);
    }

    SECTION("argument validation") {
        REQUIRE_THROWS_AS(tt_extend(B, 4, {3, 1}, {4, 4, 4, 4}), std::invalid_argument);
        REQUIRE_THROWS_AS(tt_extend(B, 4, {1, 5}, {4, 4, 4, 4}), std::invalid_argument);
        REQUIRE_THROWS_AS(tt_extend(B, 4, {1, 3}, {4, 4, 5, 4}), std::invalid_argument);
    }
}

TEST_CASE("tt_round at zero tolerance preserves elements") {
    std::mt19937 rng(31);
    TensorTrain X = random_tt({3, 4, 3}, {3, 2}, rng);
    TensorTrain R = tt_round(X, RoundingPolicy::tolerance(0.0));
    REQUIRE(rel_dist(tt_to_dense(R), tt_to_dense(X)) < 1e-13);
}

TEST_CASE("tt_round recompresses a doubled rank-1 train to bond 1") {
    std::mt19937 rng(37);
    TensorTrain A = random_tt({3, 3, 3}, {1, 1}, rng);
    TensorTrain S = tt_sum(A, A);
    REQUIRE(S.max_bond() == 2);
    TensorTrain R = tt_round(S, RoundingPolicy::tolerance(1e-12));
    REQUIRE(R.max_bond() == 1);
    DenseTensor da = tt_to_dense(A), dr = tt_to_dense(R);
    for (std::size_t f = 0; f < da.size(); ++f) REQUIRE(std::abs(dr[f] - 2.0 * da[f]) < 1e-12);
}

TEST_CASE("tt_round honors the relative Frobenius bound") {
    std::mt19937 rng(41);
    for (double eta : {1e-2, 1e-4, 1e-8}) {
        TensorTrain X = random_tt({4, 4, 4, 4}, {4, 4, 4}, rng);
        TensorTrain R = tt_round(X, RoundingPolicy::tolerance(eta));
        REQUIRE(rel_dist(tt_to_dense(R), tt_to_dense(X)) <= eta * (1.0 + 1e-10));
    }
}

TEST_CASE("tt_round bond-cap mode caps every internal bond") {
    std::mt19937 rng(43);
    TensorTrain X = random_tt({4, 4, 4, 4}, {4, 6, 4}, rng);
    TensorTrain R = tt_round(X, RoundingPolicy::bond_cap(2));
    for (std::size_t j = 1; j + 1 < R.bond_dims().size(); ++j)
        REQUIRE(R.bond_dims()[j] <= 2);

    // A train whose exact rank fits under the cap passes through unchanged.
    TensorTrain low = random_tt({4, 4, 4}, {2, 2}, rng);
    TensorTrain kept = tt_round(low, RoundingPolicy::bond_cap(2));
    REQUIRE(rel_dist(tt_to_dense(kept), tt_to_dense(low)) < 1e-13);
}

TEST_CASE("tt_frobenius_norm agrees with the dense norm") {
    REQUIRE(tt_frobenius_norm(TensorTrain::zeros({2, 2})) == 0.0);
    REQUIRE(tt_frobenius_norm(ones_tt({2, 2})) == Catch::Approx(2.0).margin(1e-14));

    std::mt19937 rng(47);
    TensorTrain X = random_tt({4, 4, 4}, {3, 3}, rng);
    REQUIRE(tt_frobenius_norm(X) ==
            Catch::Approx(tt_to_dense(X).frobenius_norm()).epsilon(1e-12));
}

TEST_CASE("random-pair dense equivalence across all operations") {
    std::mt19937 rng(53);
    std::uniform_int_distribution<std::size_t> dim_d(2, 5), ord_d(2, 5), bond_d(1, 4);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t d = ord_d(rng);
        std::vector<std::size_t> dims(d), bx(d - 1), by(d - 1);
        for (auto& n : dims) n = dim_d(rng);
        for (auto& b : bx) b = bond_d(rng);
        for (auto& b : by) b = bond_d(rng);
        TensorTrain X = random_tt(dims, bx, rng);
        TensorTrain Y = random_tt(dims, by, rng);
        DenseTensor dx = tt_to_dense(X), dy = tt_to_dense(Y);

        DenseTensor ds = tt_to_dense(tt_sum(X, Y));
        DenseTensor dh = tt_to_dense(tt_hadamard(X, Y));
        DenseTensor dr = tt_to_dense(tt_round(X, RoundingPolicy::tolerance(1e-13)));
        double worst = 0.0;
        for (std::size_t f = 0; f < dx.size(); ++f) {
            worst = std::max(worst, std::abs(ds[f] - (dx[f] + dy[f])));
            worst = std::max(worst, std::abs(dh[f] - dx[f] * dy[f]));
            worst = std::max(worst, std::abs(dr[f] - dx[f]));
        }
        REQUIRE(worst < 1e-11);
        REQUIRE(std::abs(tt_frobenius_norm(X) - dx.frobenius_norm()) <
                1e-12 * (1.0 + dx.frobenius_norm()));
    }
}

TEST_CASE("serialization round trip is bit-exact") {
    std::mt19937 rng(59);
    TensorTrain X = random_tt({3, 5, 2, 4}, {2, 4, 3}, rng);
    std::stringstream buf;
    tt_write(buf, X);
    TensorTrain Y = tt_read(buf);
    REQUIRE(Y.order() == X.order());
    for (std::size_t j = 0; j < X.order(); ++j) {
        REQUIRE(Y.core(j).rl == X.core(j).rl);
        REQUIRE(Y.core(j).n == X.core(j).n);
        REQUIRE(Y.core(j).rr == X.core(j).rr);
        REQUIRE(std::memcmp(Y.core(j).a.data(), X.core(j).a.data(),
                            X.core(j).a.size() * sizeof(cplx)) == 0);
    }

    std::stringstream bad("not a tensor train");
    REQUIRE_THROWS(tt_read(bad));
}
