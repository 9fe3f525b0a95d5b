#pragma once

// Dense-layer linear algebra on row-major batches.
//
//   forward          Z  = X W^T + b      X: batch x in,  W: out x in
//   backward_input   dX = dZ W           dZ: batch x out
//   backward_params  dW = dZ^T X, db = column sums of dZ
//
// `reference` is the plain serial triple loop kept as the test oracle.
// `parallel` is register-blocked and OpenMP-parallel over independent output
// blocks. Every output element is owned by exactly one thread and accumulated
// in a fixed order, so results do not depend on the thread count.

#include <cstddef>
#include <span>

namespace gatepilot::kernels {

struct DenseShape {
    std::size_t batch = 0;
    std::size_t in = 0;
    std::size_t out = 0;
};

namespace reference {

void forward(DenseShape s, std::span<const double> x, std::span<const double> w,
             std::span<const double> bias, std::span<double> z);
void backward_input(DenseShape s, std::span<const double> dz, std::span<const double> w,
                    std::span<double> dx);
void backward_params(DenseShape s, std::span<const double> dz, std::span<const double> x,
                     std::span<double> dw, std::span<double> db);

}  // namespace reference

namespace parallel {

void forward(DenseShape s, std::span<const double> x, std::span<const double> w,
             std::span<const double> bias, std::span<double> z);
void backward_input(DenseShape s, std::span<const double> dz, std::span<const double> w,
                    std::span<double> dx);
void backward_params(DenseShape s, std::span<const double> dz, std::span<const double> x,
                     std::span<double> dw, std::span<double> db);

/// C (m x n) = A (m x k) * B (k x n), all row-major.
void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
          std::span<const double> b, std::span<double> c);

/// Number of worker threads the parallel kernels will use.
int thread_count();

}  // namespace parallel

}  // namespace gatepilot::kernels
