// Compares the serial reference kernels against the OpenMP versions: wall
// time and the maximum absolute difference (which must be exactly zero, the
// two paths share their per-row arithmetic).

#include <chrono>
#include <cstdio>
#include <vector>

#include "impnet/linalg.hpp"
#include "impnet/rng.hpp"

using namespace impnet;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void report(const char* name, double serial_ms, double par_ms, double diff) {
    std::printf("%-18s %10.2f ms %10.2f ms   x%-5.2f   max|diff| %.1e\n", name,
                serial_ms, par_ms, serial_ms / par_ms, diff);
}

}  // namespace

int main() {
    Rng rng(42);
    std::printf("threads available: %d\n", kern::max_threads());
    std::printf("%-18s %13s %13s %8s\n", "kernel", "serial", "openmp", "speedup");

    {
        const std::size_t rows = 2048, cols = 4096;
        const auto w = random_vec(rows * cols, rng);
        const auto x = random_vec(cols, rng);
        const auto b = random_vec(rows, rng);
        std::vector<double> y1(rows), y2(rows);
        const double ts = time_best_of(5, [&] {
            kern::serial::matvec(w.data(), rows, cols, x.data(), b.data(), y1.data());
        });
        const double tp = time_best_of(5, [&] {
            kern::par::matvec(w.data(), rows, cols, x.data(), b.data(), y2.data());
        });
        report("matvec", ts, tp, max_abs_diff(y1, y2));
    }
    {
        const std::size_t rows = 2048, cols = 4096;
        const auto w = random_vec(rows * cols, rng);
        const auto g = random_vec(rows, rng);
        std::vector<double> o1(cols), o2(cols);
        const double ts = time_best_of(5, [&] {
            kern::serial::matvec_t(w.data(), rows, cols, g.data(), o1.data());
        });
        const double tp = time_best_of(5, [&] {
            kern::par::matvec_t(w.data(), rows, cols, g.data(), o2.data());
        });
        report("matvec_t", ts, tp, max_abs_diff(o1, o2));
    }
    {
        const std::size_t rows = 2048, cols = 4096;
        const auto g = random_vec(rows, rng);
        const auto x = random_vec(cols, rng);
        std::vector<double> w1(rows * cols, 0.0), w2(rows * cols, 0.0);
        const double ts = time_best_of(5, [&] {
            kern::serial::rank1_acc(w1.data(), rows, cols, g.data(), x.data());
        });
        const double tp = time_best_of(5, [&] {
            kern::par::rank1_acc(w2.data(), rows, cols, g.data(), x.data());
        });
        report("rank1_acc", ts, tp, max_abs_diff(w1, w2));
    }
    {
        const std::size_t n = 400, dim = 16;
        const auto pts = random_vec(n * dim, rng);
        std::vector<double> d1(n * n), d2(n * n);
        const double ts = time_best_of(5, [&] {
            kern::serial::pairwise_sqdist(pts.data(), n, dim, d1.data());
        });
        const double tp = time_best_of(5, [&] {
            kern::par::pairwise_sqdist(pts.data(), n, dim, d2.data());
        });
        report("pairwise_sqdist", ts, tp, max_abs_diff(d1, d2));
    }
    return 0;
}
