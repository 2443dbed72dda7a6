#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "wavpool/tensor.hpp"

using wavpool::PaddingMode;
using wavpool::SeededRng;
using wavpool::Tensor;

TEST_CASE("matmul identity and dot product") {
    Tensor eye = Tensor::mat({{1, 0}, {0, 1}});
    Tensor b = Tensor::mat({{5, 6}, {7, 8}});
    Tensor r = wavpool::matmul(eye, b);
    CHECK(r.at(0, 0) == 5);
    CHECK(r.at(0, 1) == 6);
    CHECK(r.at(1, 0) == 7);
    CHECK(r.at(1, 1) == 8);

    Tensor row = Tensor::mat({{1, 2}});
    Tensor col = Tensor::mat({{3}, {4}});
    CHECK(wavpool::matmul(row, col).at(0, 0) == 11);
}

TEST_CASE("matmul matches triple-loop oracle on random 8x8") {
    SeededRng rng(42);
    Tensor a = oracle::random_tensor({8, 8}, rng);
    Tensor b = oracle::random_tensor({8, 8}, rng);
    CHECK(oracle::max_abs_diff(wavpool::matmul(a, b), oracle::matmul_naive(a, b)) <= 1e-12);
}

TEST_CASE("matmul shape errors name both shapes") {
    Tensor a({2, 3});
    Tensor b({4, 2});
    CHECK_THROWS_WITH_AS(wavpool::matmul(a, b),
                         doctest::Contains("[2x3]"), wavpool::DimensionError);
    CHECK_THROWS_WITH_AS(wavpool::matmul(a, b),
                         doctest::Contains("[4x2]"), wavpool::DimensionError);
}

TEST_CASE("matmul is bilinear in its first argument") {
    SeededRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const double alpha = rng.uniform(-3, 3);
        Tensor a = oracle::random_tensor({4, 5}, rng);
        Tensor b = oracle::random_tensor({5, 3}, rng);
        Tensor scaled = a;
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] *= alpha;
        Tensor lhs = wavpool::matmul(scaled, b);
        Tensor rhs = wavpool::matmul(a, b);
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] *= alpha;
        CHECK(oracle::max_abs_diff(lhs, rhs) <= 1e-12);
    }
}

TEST_CASE("conv2d constant input with smoothing kernel") {
    Tensor in = Tensor::mat({{1, 1}, {1, 1}});
    Tensor k = Tensor::mat({{.5, .5}, {.5, .5}});
    Tensor out = wavpool::conv2d(in, k, 2, PaddingMode::none);
    CHECK(out.size() == 1);
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("conv2d differencing kernel annihilates constants") {
    Tensor in = Tensor::full({4, 4}, 1.0);
    Tensor psi_v = Tensor::mat({{.5, .5}, {-.5, -.5}});
    Tensor out = wavpool::conv2d(in, psi_v, 2, PaddingMode::none);
    CHECK(out.dim(0) == 2);
    CHECK(out.dim(1) == 2);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("conv2d matches sliding-window oracle") {
    SeededRng rng(3);
    Tensor in = oracle::random_tensor({6, 6}, rng);
    Tensor k = oracle::random_tensor({3, 3}, rng);
    Tensor got = wavpool::conv2d(in, k, 1, PaddingMode::none);
    CHECK(oracle::max_abs_diff(got, oracle::conv2d_naive(in, k, 1)) <= 1e-12);
}

TEST_CASE("conv2d stride 2 with 2x2 kernel halves even dimensions") {
    SeededRng rng(11);
    for (std::size_t h : {2u, 6u, 10u, 28u}) {
        Tensor in = oracle::random_tensor({h, h}, rng);
        Tensor k = oracle::random_tensor({2, 2}, rng);
        Tensor out = wavpool::conv2d(in, k, 2, PaddingMode::none);
        CHECK(out.dim(0) == h / 2);
        CHECK(out.dim(1) == h / 2);
    }
}

TEST_CASE("conv2d zero padding preserves dims at stride 1") {
    SeededRng rng(5);
    for (std::size_t k : {2u, 3u, 4u}) {
        Tensor in = oracle::random_tensor({7, 9}, rng);
        Tensor ker = oracle::random_tensor({k, k}, rng);
        Tensor out = wavpool::conv2d(in, ker, 1, PaddingMode::zero);
        CHECK(out.dim(0) == 7);
        CHECK(out.dim(1) == 9);
    }
}

TEST_CASE("conv2d replicate padding makes odd extents reachable at stride 2") {
    Tensor in = Tensor::mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    Tensor k = Tensor::mat({{.5, .5}, {.5, .5}});
    Tensor out = wavpool::conv2d(in, k, 2, PaddingMode::replicate_edge);
    CHECK(out.dim(0) == 2);
    CHECK(out.dim(1) == 2);
    CHECK(out.at(0, 0) == doctest::Approx((1 + 2 + 4 + 5) / 2.0));
    // bottom-right window samples the replicated row and column
    CHECK(out.at(1, 1) == doctest::Approx((9 + 9 + 9 + 9) / 2.0));
}

TEST_CASE("conv2d rejects kernels larger than the padded input") {
    Tensor in({3, 3});
    Tensor k({4, 4});
    CHECK_THROWS_AS(wavpool::conv2d(in, k, 1, PaddingMode::none), wavpool::DimensionError);
}

TEST_CASE("maxpool3d constant block and global max") {
    Tensor in = Tensor::full({2, 2, 2}, 3.25);
    Tensor out = wavpool::maxpool3d(in, 2, 2, 2);
    CHECK(out.size() == 1);
    CHECK(out[0] == 3.25);

    SeededRng rng(9);
    Tensor r = oracle::random_tensor({3, 4, 2}, rng);
    r.at(1, 2, 0) = 99.0;
    Tensor whole = wavpool::maxpool3d(r, 3, 4, 2);
    CHECK(whole.size() == 1);
    CHECK(whole[0] == 99.0);
}

TEST_CASE("maxpool3d matches exhaustive-window oracle") {
    SeededRng rng(13);
    Tensor in = oracle::random_tensor({4, 3, 5}, rng);
    Tensor got = wavpool::maxpool3d(in, 2, 2, 2);
    Tensor want = oracle::maxpool3d_naive(in, 2, 2, 2);
    CHECK(oracle::max_abs_diff(got, want) == 0.0);
}

TEST_CASE("maxpool3d output bounded by input extrema") {
    SeededRng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor in = oracle::random_tensor({5, 4, 6}, rng);
        double lo = in[0], hi = in[0];
        for (std::size_t i = 0; i < in.size(); ++i) {
            lo = std::min(lo, in[i]);
            hi = std::max(hi, in[i]);
        }
        Tensor out = wavpool::maxpool3d(in, 2, 3, 2);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] <= hi);
            CHECK(out[i] >= lo);
        }
    }
}

TEST_CASE("maxpool3d rejects oversized kernels") {
    Tensor in({2, 2, 2});
    CHECK_THROWS_AS(wavpool::maxpool3d(in, 3, 2, 2), wavpool::DimensionError);
}

TEST_CASE("SeededRng reproducibility and derivation") {
    SeededRng a(123), b(123), c(124);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);

    SeededRng base(55);
    SeededRng d0 = base.derive(0), d1 = base.derive(1), d0b = base.derive(0);
    CHECK(d0.next_u64() == d0b.next_u64());
    CHECK(d0.next_u64() != d1.next_u64());
}

TEST_CASE("SeededRng known first outputs stay pinned") {
    // Frozen from this generator's defined algorithm (splitmix64 seeding of
    // xoshiro256**); any change to either breaks cross-run reproducibility.
    SeededRng r(0);
    CHECK(r.next_u64() == 11091344671253066420ULL);
    CHECK(r.next_u64() == 13793997310169335082ULL);
    CHECK(r.next_u64() == 1900383378846508768ULL);
    SeededRng u(1);
    CHECK(u.next_u64() == 12966619160104079557ULL);
    CHECK(u.next_u64() == 9600361134598540522ULL);
    SeededRng d(7);
    CHECK(d.derive(3).next_u64() == 13474124148888230556ULL);
}

TEST_CASE("SeededRng uniform01 stays in range and permutation is a bijection") {
    SeededRng rng(321);
    for (int i = 0; i < 1000; ++i) {
        double v = rng.uniform01();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    auto p = rng.permutation(257);
    std::vector<bool> seen(257, false);
    for (auto i : p) seen[i] = true;
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool x) { return x; }));
}

TEST_CASE("tensor shape checks") {
    CHECK_THROWS_AS(Tensor({2, 0}), wavpool::DimensionError);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), wavpool::DimensionError);
    Tensor t({2, 3});
    CHECK_THROWS_AS(t.reshaped({5}), wavpool::DimensionError);
    CHECK(t.reshaped({6}).rank() == 1);
}
