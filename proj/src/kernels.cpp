// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vnsgru::kernels {

namespace serial {

void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  // y[j] = sum_i a[i][j] * x[i]; the column walk keeps each output element
  // a single serial accumulation so the parallel variant can match it.
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a[i * n + j] * x[i];
    y[j] = acc;
  }
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) acc += arow[p] * b[p * k + j];
      crow[j] = acc;
    }
  }
}

void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = a + i * n;
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) row[j] += xi * y[j];
  }
}

void map_sigmoid(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void map_tanh(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void vadd(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void vsub(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void vmul(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void vaffine(const double* a, double m, double c, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = m * a[i] + c;
}

} // namespace serial

namespace openmp {

// Each kernel parallelizes over independent output elements only; per-element
// accumulation order is identical to the serial reference, which makes the
// two variants bit-exact regardless of thread count.

void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    const double* row = a + static_cast<std::size_t>(i) * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
#else
  serial::matvec(a, x, y, m, n);
#endif
}

void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < static_cast<long long>(n); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += a[i * n + static_cast<std::size_t>(j)] * x[i];
    y[j] = acc;
  }
#else
  serial::matvec_t(a, x, y, m, n);
#endif
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * n;
    double* crow = c + static_cast<std::size_t>(i) * k;
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) acc += arow[p] * b[p * k + j];
      crow[j] = acc;
    }
  }
#else
  serial::matmul(a, b, c, m, n, k);
#endif
}

void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    double* row = a + static_cast<std::size_t>(i) * n;
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) row[j] += xi * y[j];
  }
#else
  serial::outer_acc(a, x, y, m, n);
#endif
}

void map_sigmoid(const double* x, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] = 1.0 / (1.0 + std::exp(-x[i]));
#else
  serial::map_sigmoid(x, y, n);
#endif
}

void map_tanh(const double* x, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = std::tanh(x[i]);
#else
  serial::map_tanh(x, y, n);
#endif
}

void vadd(const double* a, const double* b, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = a[i] + b[i];
#else
  serial::vadd(a, b, y, n);
#endif
}

void vsub(const double* a, const double* b, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = a[i] - b[i];
#else
  serial::vsub(a, b, y, n);
#endif
}

void vmul(const double* a, const double* b, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = a[i] * b[i];
#else
  serial::vmul(a, b, y, n);
#endif
}

void vaffine(const double* a, double m, double c, double* y, std::size_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = m * a[i] + c;
#else
  serial::vaffine(a, m, c, y, n);
#endif
}

} // namespace openmp

namespace {
inline bool big(std::size_t work) { return work >= kParallelGrain; }
} // namespace

void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  if (big(m * n)) openmp::matvec(a, x, y, m, n);
  else serial::matvec(a, x, y, m, n);
}

void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  if (big(m * n)) openmp::matvec_t(a, x, y, m, n);
  else serial::matvec_t(a, x, y, m, n);
}

void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k) {
  if (big(m * n * k)) openmp::matmul(a, b, c, m, n, k);
  else serial::matmul(a, b, c, m, n, k);
}

void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n) {
  if (big(m * n)) openmp::outer_acc(a, x, y, m, n);
  else serial::outer_acc(a, x, y, m, n);
}

void map_sigmoid(const double* x, double* y, std::size_t n) {
  if (big(n)) openmp::map_sigmoid(x, y, n);
  else serial::map_sigmoid(x, y, n);
}

void map_tanh(const double* x, double* y, std::size_t n) {
  if (big(n)) openmp::map_tanh(x, y, n);
  else serial::map_tanh(x, y, n);
}

void vadd(const double* a, const double* b, double* y, std::size_t n) {
  if (big(n)) openmp::vadd(a, b, y, n);
  else serial::vadd(a, b, y, n);
}

void vsub(const double* a, const double* b, double* y, std::size_t n) {
  if (big(n)) openmp::vsub(a, b, y, n);
  else serial::vsub(a, b, y, n);
}

void vmul(const double* a, const double* b, double* y, std::size_t n) {
  if (big(n)) openmp::vmul(a, b, y, n);
  else serial::vmul(a, b, y, n);
}

void vaffine(const double* a, double m, double c, double* y, std::size_t n) {
  if (big(n)) openmp::vaffine(a, m, c, y, n);
  else serial::vaffine(a, m, c, y, n);
}

} // namespace vnsgru::kernels
