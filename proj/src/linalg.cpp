#include "impnet/linalg.hpp"

#include <atomic>
#include <vector>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace impnet::kern {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() {
#ifdef _OPENMP
    return g_parallel.load(std::memory_order_relaxed);
#else
    return false;
#endif
}

void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// ---- shared per-row routines -------------------------------------------
// noinline: the serial and OpenMP drivers must execute the exact same
// instruction stream per row, otherwise vectorization differences could
// break bit-equality between the two paths.

[[gnu::noinline]] double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

namespace {

[[gnu::noinline]] void row_axpy(double* dst, double g, const double* x,
                                std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += g * x[i];
}

// W^T g is computed by streaming rows into per-chunk accumulators. The chunk
// count is a fixed constant (not the thread count) and chunks combine in
// index order, so the result is identical for any parallel schedule.
constexpr std::size_t kAccChunks = 8;

[[gnu::noinline]] void acc_rows(const double* w, std::size_t row_begin,
                                std::size_t row_end, std::size_t cols,
                                const double* g, double* out) {
    for (std::size_t c = 0; c < cols; ++c) out[c] = 0.0;
    for (std::size_t r = row_begin; r < row_end; ++r) {
        const double gr = g[r];
        const double* wr = w + r * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += gr * wr[c];
    }
}

void combine_chunks(const double* partial, std::size_t cols, double* out) {
    for (std::size_t c = 0; c < cols; ++c) out[c] = partial[c];
    for (std::size_t k = 1; k < kAccChunks; ++k) {
        const double* p = partial + k * cols;
        for (std::size_t c = 0; c < cols; ++c) out[c] += p[c];
    }
}

[[gnu::noinline]] double sqdist(const double* a, const double* b,
                                std::size_t n) {
    double s0 = 0.0, s1 = 0.0;
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        s0 += d0 * d0;
        s1 += d1 * d1;
    }
    if (i < n) {
        const double d = a[i] - b[i];
        s0 += d * d;
    }
    return s0 + s1;
}

}  // namespace

// ---- serial reference ----------------------------------------------------

namespace serial {

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot(w + r * cols, x, cols) + (bias ? bias[r] : 0.0);
    }
}

void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out) {
    std::vector<double> partial(kAccChunks * cols);
    for (std::size_t k = 0; k < kAccChunks; ++k) {
        acc_rows(w, rows * k / kAccChunks, rows * (k + 1) / kAccChunks, cols, g,
                 partial.data() + k * cols);
    }
    combine_chunks(partial.data(), cols, out);
}

void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x) {
    for (std::size_t r = 0; r < rows; ++r) {
        row_axpy(dw + r * cols, g[r], x, cols);
    }
}

void relu(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* pre, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
}

void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d) {
    for (std::size_t i = 0; i < n; ++i) {
        d[i * n + i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) d[i * n + j] = sqdist(x + i * dim, x + j * dim, dim);
        }
    }
}

}  // namespace serial

// ---- OpenMP version --------------------------------------------------------

namespace par {

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        y[r] = dot(w + r * cols, x, cols) + (bias ? bias[r] : 0.0);
    }
}

void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out) {
    std::vector<double> partial(kAccChunks * cols);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(kAccChunks); ++k) {
        acc_rows(w, rows * k / kAccChunks, rows * (k + 1) / kAccChunks, cols, g,
                 partial.data() + k * cols);
    }
    combine_chunks(partial.data(), cols, out);
}

void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
        row_axpy(dw + r * cols, g[r], x, cols);
    }
}

void relu(const double* in, double* out, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        out[i] = in[i] > 0.0 ? in[i] : 0.0;
    }
}

void relu_backward(const double* pre, double* g, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        if (!(pre[i] > 0.0)) g[i] = 0.0;
    }
}

void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        d[i * n + i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != static_cast<std::size_t>(i)) {
                d[i * n + j] = sqdist(x + i * dim, x + j * dim, dim);
            }
        }
    }
}

}  // namespace par

// ---- dispatch ------------------------------------------------------------

#define IMPNET_DISPATCH(fn, ...)            \
    do {                                    \
        if (parallel_enabled())             \
            par::fn(__VA_ARGS__);           \
        else                                \
            serial::fn(__VA_ARGS__);        \
    } while (0)

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y) {
    IMPNET_DISPATCH(matvec, w, rows, cols, x, bias, y);
}
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out) {
    IMPNET_DISPATCH(matvec_t, w, rows, cols, g, out);
}
void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x) {
    IMPNET_DISPATCH(rank1_acc, dw, rows, cols, g, x);
}
void relu(const double* in, double* out, std::size_t n) {
    IMPNET_DISPATCH(relu, in, out, n);
}
void relu_backward(const double* pre, double* g, std::size_t n) {
    IMPNET_DISPATCH(relu_backward, pre, g, n);
}
void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d) {
    IMPNET_DISPATCH(pairwise_sqdist, x, n, dim, d);
}

#undef IMPNET_DISPATCH

double norm2(const double* a, std::size_t n) {
    return std::sqrt(dot(a, a, n));
}

}  // namespace impnet::kern
