#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "impnet/rng.hpp"
#include "impnet/tensorize.hpp"

using namespace impnet;
using tensorize::FlatSample;

namespace {

spectra::DqAdmittanceCurve random_curve(std::uint32_t t_count, std::uint64_t seed) {
    Rng rng(seed);
    spectra::DqAdmittanceCurve c;
    c.grid = spectra::make_frequency_grid(1.0, 1.0, t_count);
    c.values.resize(t_count);
    for (auto& y : c.values) {
        y.y11 = {rng.normal(), rng.normal()};
        y.y12 = {rng.normal(), rng.normal()};
        y.y21 = {rng.normal(), rng.normal()};
        y.y22 = {rng.normal(), rng.normal()};
    }
    return c;
}

}  // namespace

TEST_CASE("flatten follows the t-major (real,imag) x element layout") {
    spectra::DqAdmittanceCurve c;
    c.grid = spectra::make_frequency_grid(1.0, 1.0, 2);
    c.values.resize(2);
    c.values[0].y11 = {1.0, 2.0};

    auto x = tensorize::flatten(c);
    // T=1 slice: [1,0,0,0, 2,0,0,0]
    CHECK(x.size() == 16);
    CHECK(x[0] == 1.0);
    CHECK(x[4] == 2.0);
    for (std::size_t i : {1u, 2u, 3u, 5u, 6u, 7u}) CHECK(x[i] == 0.0);

    const auto zero = tensorize::flatten(
        {spectra::make_frequency_grid(1.0, 1.0, 3), std::vector<spectra::Yblock>(3)});
    CHECK(zero == FlatSample(24, 0.0));

    // paper-size check: T=2500 flattens to 20000 reals
    spectra::DqAdmittanceCurve big;
    big.grid = spectra::make_frequency_grid(1.0, 1.0, 2500);
    big.values.resize(2500);
    CHECK(tensorize::flatten(big).size() == 20000);
}

TEST_CASE("unflatten inverts flatten exactly") {
    const auto c = random_curve(17, 5);
    const auto x = tensorize::flatten(c);
    CHECK(tensorize::unflatten(x, c.grid) == c);

    CHECK_THROWS(tensorize::unflatten(FlatSample(15, 0.0), c.grid));
}

TEST_CASE("fit_norm pools every entry") {
    // pooled {1,2,3}: mu 2, population sigma sqrt(2/3)
    const auto s = tensorize::fit_norm({FlatSample{1.0, 2.0, 3.0}});
    CHECK(s.mu == doctest::Approx(2.0));
    CHECK(s.sigma == doctest::Approx(0.816496580927726).epsilon(1e-12));

    const auto sym = tensorize::fit_norm({FlatSample{-1.0}, FlatSample{1.0}});
    CHECK(sym.mu == doctest::Approx(0.0));
    CHECK(sym.sigma == doctest::Approx(1.0));

    CHECK_THROWS(tensorize::fit_norm({FlatSample{3.0, 3.0}, FlatSample{3.0}}));
    CHECK_THROWS(tensorize::fit_norm({}));
}

TEST_CASE("normalize examples and inverse") {
    tensorize::NormStats n{2.0, 0.816496580927726};
    const auto z = tensorize::normalize({1.0, 2.0, 3.0}, n);
    CHECK(z[0] == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(z[2] == doctest::Approx(1.224744871391589).epsilon(1e-12));

    CHECK(tensorize::normalize({2.0, 2.0}, n) == FlatSample{0.0, 0.0});
    CHECK(tensorize::normalize({-4.0, 7.5}, {0.0, 1.0}) == FlatSample{-4.0, 7.5});

    Rng rng(11);
    FlatSample x(257);
    for (double& v : x) v = 10.0 * rng.normal() - 3.0;
    const auto back = tensorize::denormalize(tensorize::normalize(x, n), n);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(back[i] - x[i]) <= 1e-12);
    }
}

TEST_CASE("self-normalized pool has zero mean and unit spread") {
    Rng rng(13);
    std::vector<FlatSample> pool;
    for (int s = 0; s < 8; ++s) {
        FlatSample x(200);
        for (double& v : x) v = 4.0 * rng.normal() + 1.5;
        pool.push_back(std::move(x));
    }
    const auto stats = tensorize::fit_norm(pool);
    double sum = 0.0, ss = 0.0;
    std::size_t count = 0;
    for (auto& x : pool) {
        x = tensorize::normalize(x, stats);
        for (double v : x) {
            sum += v;
            ss += v * v;
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = ss / static_cast<double>(count) - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
}

TEST_CASE("normalization is affine") {
    Rng rng(17);
    tensorize::NormStats n{0.7, 2.3};
    for (int rep = 0; rep < 5; ++rep) {
        FlatSample x(64);
        for (double& v : x) v = rng.normal();
        const double a = rng.uniform(0.5, 2.0);
        const double b = rng.uniform(-1.0, 1.0);
        FlatSample ax(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i] + b;
        const auto za = tensorize::normalize(ax, n);
        double mean_x = 0.0, mean_za = 0.0;
        for (double v : x) mean_x += v;
        for (double v : za) mean_za += v;
        mean_x /= static_cast<double>(x.size());
        mean_za /= static_cast<double>(za.size());
        CHECK(mean_za ==
              doctest::Approx((a * mean_x + b - n.mu) / n.sigma).epsilon(1e-9));
    }
}

TEST_CASE("element regrouping round-trips and orders by (t, component)") {
    const auto c = random_curve(6, 23);
    const auto x = tensorize::flatten(c);
    const auto groups = tensorize::regroup_by_element(x);
    for (const auto& g : groups) CHECK(g.size() == x.size() / 4);
    // group e holds x[t*8 + c*4 + e] at slot t*2 + c
    for (std::size_t t = 0; t < 6; ++t) {
        for (std::size_t comp = 0; comp < 2; ++comp) {
            for (std::size_t e = 0; e < 4; ++e) {
                CHECK(groups[e][t * 2 + comp] == x[t * 8 + comp * 4 + e]);
            }
        }
    }
    CHECK(tensorize::degroup_by_element(groups) == x);
}
