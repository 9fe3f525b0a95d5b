#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gatepilot/kernels.hpp"
#include "kernels_checks.hpp"

namespace gatepilot::kernels::parallel {

namespace {

// Micro-tile: kRows rows of C by kCols columns, held in registers across the k loop.
constexpr std::size_t kRows = 4;
constexpr std::size_t kCols = 32;

void tile_full(std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    double acc[kRows][kCols] = {};
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* brow = b + kk * n;
        for (std::size_t r = 0; r < kRows; ++r) {
            const double ar = a[r * k + kk];
            for (std::size_t j = 0; j < kCols; ++j) acc[r][j] = std::fma(ar, brow[j], acc[r][j]);
        }
    }
    for (std::size_t r = 0; r < kRows; ++r) {
        std::copy_n(acc[r], kCols, c + r * n);
    }
}

void tile_edge(std::size_t rows, std::size_t cols, std::size_t k, std::size_t n, const double* a,
               const double* b, double* c) {
    double acc[kRows][kCols] = {};
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double* brow = b + kk * n;
        for (std::size_t r = 0; r < rows; ++r) {
            const double ar = a[r * k + kk];
            for (std::size_t j = 0; j < cols; ++j) acc[r][j] = std::fma(ar, brow[j], acc[r][j]);
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(acc[r], cols, c + r * n);
    }
}

void transpose(std::size_t rows, std::size_t cols, const double* src, std::vector<double>& dst) {
    constexpr std::size_t kBlock = 16;
    dst.resize(rows * cols);
    double* out = dst.data();
    for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
        const std::size_t r1 = std::min(rows, r0 + kBlock);
        for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
            const std::size_t c1 = std::min(cols, c0 + kBlock);
            for (std::size_t c = c0; c < c1; ++c) {
                for (std::size_t r = r0; r < r1; ++r) out[c * rows + r] = src[r * cols + c];
            }
        }
    }
}

// y[o] = dot(W[o, :], x) + bias[o], eight interleaved partial sums per row.
void gemv_rows(std::size_t out, std::size_t in, const double* w, const double* x, const double* bias,
               double* y) {
    constexpr std::size_t kLanes = 8;
    const std::size_t body = in - in % kLanes;
#pragma omp parallel for schedule(static)
    for (std::size_t o = 0; o < out; ++o) {
        const double* row = w + o * in;
        double lanes[kLanes] = {};
        for (std::size_t i = 0; i < body; i += kLanes) {
            for (std::size_t j = 0; j < kLanes; ++j) lanes[j] = std::fma(row[i + j], x[i + j], lanes[j]);
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < kLanes; ++j) acc += lanes[j];
        for (std::size_t i = body; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc + bias[o];
    }
}

std::vector<double>& scratch() {
    thread_local std::vector<double> buf;
    return buf;
}

}  // namespace

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
          std::span<const double> b, std::span<double> c) {
    detail::expect_size(a.size(), m * k, "gemm A");
    detail::expect_size(b.size(), k * n, "gemm B");
    detail::expect_size(c.size(), m * n, "gemm C");
    const long row_blocks = static_cast<long>((m + kRows - 1) / kRows);
    const long col_blocks = static_cast<long>((n + kCols - 1) / kCols);
    const long tiles = row_blocks * col_blocks;

#pragma omp parallel for schedule(static)
    for (long t = 0; t < tiles; ++t) {
        const std::size_t r0 = static_cast<std::size_t>(t / col_blocks) * kRows;
        const std::size_t c0 = static_cast<std::size_t>(t % col_blocks) * kCols;
        const std::size_t rows = std::min(kRows, m - r0);
        const std::size_t cols = std::min(kCols, n - c0);
        const double* ap = a.data() + r0 * k;
        const double* bp = b.data() + c0;
        double* cp = c.data() + r0 * n + c0;
        if (rows == kRows && cols == kCols) {
            tile_full(k, n, ap, bp, cp);
        } else {
            tile_edge(rows, cols, k, n, ap, bp, cp);
        }
    }
}

void forward(DenseShape s, std::span<const double> x, std::span<const double> w,
             std::span<const double> bias, std::span<double> z) {
    detail::check_forward(s, x, w, bias, z);
    if (s.batch == 1) {
        gemv_rows(s.out, s.in, w.data(), x.data(), bias.data(), z.data());
        return;
    }
    std::vector<double>& wt = scratch();
    transpose(s.out, s.in, w.data(), wt);
    gemm(s.batch, s.in, s.out, x, wt, z);
    for (std::size_t b = 0; b < s.batch; ++b) {
        double* row = z.data() + b * s.out;
        for (std::size_t o = 0; o < s.out; ++o) row[o] += bias[o];
    }
}

void backward_input(DenseShape s, std::span<const double> dz, std::span<const double> w,
                    std::span<double> dx) {
    detail::check_backward_input(s, dz, w, dx);
    gemm(s.batch, s.out, s.in, dz, w, dx);
}

void backward_params(DenseShape s, std::span<const double> dz, std::span<const double> x,
                     std::span<double> dw, std::span<double> db) {
    detail::check_backward_params(s, dz, x, dw, db);
    std::vector<double>& dzt = scratch();
    transpose(s.batch, s.out, dz.data(), dzt);
    gemm(s.out, s.batch, s.in, dzt, x, dw);
    for (std::size_t o = 0; o < s.out; ++o) {
        const double* col = dzt.data() + o * s.batch;
        double acc = 0.0;
        for (std::size_t b = 0; b < s.batch; ++b) acc += col[b];
        db[o] = acc;
    }
}

}  // namespace gatepilot::kernels::parallel
