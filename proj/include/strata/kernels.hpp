#pragma once

// Dense linear-algebra kernels used by the autodiff graph.
//
// Every kernel accumulates into its output (y += ...). Two implementations
// exist: `serial` is the plain reference loop nest; `parallel` splits the
// OUTPUT elements across OpenMP threads and keeps each element's inner
// accumulation in the same order as the reference, so both produce
// bit-identical results. The unqualified entry points dispatch to the
// parallel version.
//
// Layout: row-major. W is rows x cols.

#include <cstddef>
#include <span>

namespace strata::kernels {

namespace serial {
// y[r] += sum_c W[r,c] x[c]
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
// y[c] += sum_r W[r,c] x[r]
void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
// W[r,c] += g[r] x[c]
void ger(std::span<const double> g, std::span<const double> x, std::span<double> w);
// C[k,r] += sum_c A[k,c] B[r,c]   (A: k x n, B: r x n)
void gemm_nt(std::span<const double> a, std::size_t k, std::size_t n,
             std::span<const double> b, std::size_t r, std::span<double> c);
// C[k,n] += sum_r A[k,r] B[r,n]   (A: k x r, B: r x n)
void gemm_nn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c);
// C[r,n] += sum_k A[k,r] B[k,n]   (A: k x r, B: k x n)
void gemm_tn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c);
}  // namespace serial

namespace parallel {
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);
void ger(std::span<const double> g, std::span<const double> x, std::span<double> w);
void gemm_nt(std::span<const double> a, std::size_t k, std::size_t n,
             std::span<const double> b, std::size_t r, std::span<double> c);
void gemm_nn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c);
void gemm_tn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c);
}  // namespace parallel

using parallel::gemm_nn;
using parallel::gemm_nt;
using parallel::gemm_tn;
using parallel::gemv;
using parallel::gemv_t;
using parallel::ger;

/// Work size (multiply-adds) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 15;

}  // namespace strata::kernels
