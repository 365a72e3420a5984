#include "strata/kernels.hpp"

#include <cstdint>

namespace strata::kernels {

namespace serial {

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w.data() + r * cols;
    double acc = y[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w.data() + r * cols;
    const double xr = x[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

void ger(std::span<const double> g, std::span<const double> x, std::span<double> w) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < g.size(); ++r) {
    double* row = w.data() + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void gemm_nt(std::span<const double> a, std::size_t k, std::size_t n,
             std::span<const double> b, std::size_t r, std::span<double> c) {
  for (std::size_t i = 0; i < k; ++i) {
    const double* ai = a.data() + i * n;
    for (std::size_t j = 0; j < r; ++j) {
      const double* bj = b.data() + j * n;
      double acc = c[i * r + j];
      for (std::size_t t = 0; t < n; ++t) acc += ai[t] * bj[t];
      c[i * r + j] = acc;
    }
  }
}

void gemm_nn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c) {
  for (std::size_t i = 0; i < k; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t t = 0; t < r; ++t) {
      const double ait = a[i * r + t];
      const double* bt = b.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ait * bt[j];
    }
  }
}

void gemm_tn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c) {
  for (std::size_t t = 0; t < k; ++t) {
    const double* at = a.data() + t * r;
    const double* bt = b.data() + t * n;
    for (std::size_t i = 0; i < r; ++i) {
      double* ci = c.data() + i * n;
      const double ati = at[i];
      for (std::size_t j = 0; j < n; ++j) ci[j] += ati * bt[j];
    }
  }
}

}  // namespace serial

namespace parallel {

// Loop indices are signed for OpenMP; every kernel parallelizes over output
// rows only and keeps the reference accumulation order within a row.

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    const double* row = w.data() + static_cast<std::size_t>(r) * cols;
    double acc = y[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelThreshold)
  for (std::int64_t c = 0; c < n; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    double acc = y[cc];
    for (std::size_t r = 0; r < rows; ++r) acc += w[r * cols + cc] * x[r];
    y[cc] = acc;
  }
}

void ger(std::span<const double> g, std::span<const double> x, std::span<double> w) {
  const std::size_t cols = x.size();
  const auto n = static_cast<std::int64_t>(g.size());
#pragma omp parallel for schedule(static) if (g.size() * cols >= kParallelThreshold)
  for (std::int64_t r = 0; r < n; ++r) {
    double* row = w.data() + static_cast<std::size_t>(r) * cols;
    const double gr = g[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void gemm_nt(std::span<const double> a, std::size_t k, std::size_t n,
             std::span<const double> b, std::size_t r, std::span<double> c) {
  const auto rows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static) if (k * n * r >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const double* ai = a.data() + ii * n;
    for (std::size_t j = 0; j < r; ++j) {
      const double* bj = b.data() + j * n;
      double acc = c[ii * r + j];
      for (std::size_t t = 0; t < n; ++t) acc += ai[t] * bj[t];
      c[ii * r + j] = acc;
    }
  }
}

void gemm_nn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c) {
  const auto rows = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static) if (k * n * r >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    double* ci = c.data() + ii * n;
    for (std::size_t t = 0; t < r; ++t) {
      const double ait = a[ii * r + t];
      const double* bt = b.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ait * bt[j];
    }
  }
}

void gemm_tn(std::span<const double> a, std::size_t k, std::size_t r,
             std::span<const double> b, std::size_t n, std::span<double> c) {
  const auto out_rows = static_cast<std::int64_t>(r);
#pragma omp parallel for schedule(static) if (k * n * r >= kParallelThreshold)
  for (std::int64_t i = 0; i < out_rows; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    double* ci = c.data() + ii * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double ati = a[t * r + ii];
      const double* bt = b.data() + t * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ati * bt[j];
    }
  }
}

}  // namespace parallel

}  // namespace strata::kernels
