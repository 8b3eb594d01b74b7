#pragma once

#include <cstddef>
#include <vector>

// Dense kernels behind the autoencoder and t-SNE inner loops.
//
// Every kernel exists twice: impnet::kern::serial is the plain reference
// used by tests, impnet::kern::par is the OpenMP version. Both call the same
// non-inlined per-row routines and each output slot is written by exactly one
// iteration, so the parallel results are bit-identical to the serial ones for
// any thread count. The unqualified impnet::kern entry points dispatch on
// kern::parallel_enabled().

namespace impnet::kern {

bool parallel_enabled();
void set_parallel(bool on);
int max_threads();

// Inner dot product with a fixed 4-accumulator association order. The order
// is part of the numeric contract: serial and parallel paths share it.
double dot(const double* a, const double* b, std::size_t n);

namespace serial {
// y[r] = sum_c w[r*cols+c]*x[c] + (bias ? bias[r] : 0)
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y);
// out[c] = sum_r w[r*cols+c]*g[r]   (i.e. out = W^T g)
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);
// dw[r*cols+c] += g[r]*x[c]
void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x);
// out[i] = max(in[i], 0)
void relu(const double* in, double* out, std::size_t n);
// g[i] = pre[i] > 0 ? g[i] : 0   (derivative at exactly 0 is 0)
void relu_backward(const double* pre, double* g, std::size_t n);
// d[i*n+j] = ||x_i - x_j||^2 for row-major points (n x dim)
void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d);
}  // namespace serial

namespace par {
void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y);
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);
void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x);
void relu(const double* in, double* out, std::size_t n);
void relu_backward(const double* pre, double* g, std::size_t n);
void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d);
}  // namespace par

void matvec(const double* w, std::size_t rows, std::size_t cols,
            const double* x, const double* bias, double* y);
void matvec_t(const double* w, std::size_t rows, std::size_t cols,
              const double* g, double* out);
void rank1_acc(double* dw, std::size_t rows, std::size_t cols,
               const double* g, const double* x);
void relu(const double* in, double* out, std::size_t n);
void relu_backward(const double* pre, double* g, std::size_t n);
void pairwise_sqdist(const double* x, std::size_t n, std::size_t dim,
                     double* d);

// Serial helpers (cheap relative to the kernels above, order-sensitive).
double norm2(const double* a, std::size_t n);
inline double norm2(const std::vector<double>& a) { return norm2(a.data(), a.size()); }

}  // namespace impnet::kern
