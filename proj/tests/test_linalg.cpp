#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "impnet/linalg.hpp"
#include "impnet/rng.hpp"

using namespace impnet;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("dot matches a plain reference within round-off") {
    Rng rng(1);
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        double ref = 0.0;
        for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
        CHECK(kern::dot(a.data(), b.data(), n) ==
              doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("serial and openmp kernels are bit-identical") {
    Rng rng(2);
    for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{17, 33},
                              {64, 64},
                              {3, 257},
                              {130, 5}}) {
        const auto w = random_vec(rows * cols, rng);
        const auto x = random_vec(cols, rng);
        const auto b = random_vec(rows, rng);
        const auto g = random_vec(rows, rng);

        std::vector<double> y1(rows), y2(rows);
        kern::serial::matvec(w.data(), rows, cols, x.data(), b.data(), y1.data());
        kern::par::matvec(w.data(), rows, cols, x.data(), b.data(), y2.data());
        CHECK(y1 == y2);

        std::vector<double> o1(cols), o2(cols);
        kern::serial::matvec_t(w.data(), rows, cols, g.data(), o1.data());
        kern::par::matvec_t(w.data(), rows, cols, g.data(), o2.data());
        CHECK(o1 == o2);

        std::vector<double> w1(rows * cols, 0.5), w2(rows * cols, 0.5);
        kern::serial::rank1_acc(w1.data(), rows, cols, g.data(), x.data());
        kern::par::rank1_acc(w2.data(), rows, cols, g.data(), x.data());
        CHECK(w1 == w2);
    }

    const auto pts = random_vec(40 * 7, rng);
    std::vector<double> d1(40 * 40), d2(40 * 40);
    kern::serial::pairwise_sqdist(pts.data(), 40, 7, d1.data());
    kern::par::pairwise_sqdist(pts.data(), 40, 7, d2.data());
    CHECK(d1 == d2);
}

TEST_CASE("matvec semantics vs naive loop") {
    Rng rng(3);
    const std::size_t rows = 11, cols = 23;
    const auto w = random_vec(rows * cols, rng);
    const auto x = random_vec(cols, rng);
    const auto b = random_vec(rows, rng);
    std::vector<double> y(rows);
    kern::matvec(w.data(), rows, cols, x.data(), b.data(), y.data());
    for (std::size_t r = 0; r < rows; ++r) {
        double ref = b[r];
        for (std::size_t c = 0; c < cols; ++c) ref += w[r * cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("relu and its backward gate") {
    const std::vector<double> in = {-3.0, 0.0, 5.0, -0.0, 2.5};
    std::vector<double> out(in.size());
    kern::relu(in.data(), out.data(), in.size());
    CHECK(out == std::vector<double>{0.0, 0.0, 5.0, 0.0, 2.5});

    std::vector<double> g = {1.0, 1.0, 1.0, 1.0, 1.0};
    kern::relu_backward(in.data(), g.data(), g.size());
    // derivative at exactly 0 is 0
    CHECK(g == std::vector<double>{0.0, 0.0, 1.0, 0.0, 1.0});
}

TEST_CASE("pairwise_sqdist is symmetric with zero diagonal") {
    Rng rng(4);
    const std::size_t n = 13, dim = 5;
    const auto pts = random_vec(n * dim, rng);
    std::vector<double> d(n * n);
    kern::pairwise_sqdist(pts.data(), n, dim, d.data());
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(d[i * n + i] == 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(d[i * n + j] == d[j * n + i]);
            CHECK(d[i * n + j] >= 0.0);
        }
    }
}
