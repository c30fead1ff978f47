// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace vnsgru::kernels {

/// Work sizes below this run the serial kernel even when OpenMP is
/// compiled in; spawning a team for a 6x6 gate matrix costs more than the
/// multiply itself.
inline constexpr std::size_t kParallelGrain = 1u << 14;

// Serial reference kernels. These stay the source of truth: the OpenMP
// variants split the same per-output-element scalar loops across threads,
// so both produce bit-identical results and the tests assert exactly that.
namespace serial {

void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k);
/// a{m,n} += x{m} (outer) y{n}
void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n);

void map_sigmoid(const double* x, double* y, std::size_t n);
void map_tanh(const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* y, std::size_t n);
void vsub(const double* a, const double* b, double* y, std::size_t n);
void vmul(const double* a, const double* b, double* y, std::size_t n);
void vaffine(const double* a, double m, double c, double* y, std::size_t n);

} // namespace serial

namespace openmp {

void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k);
void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n);

void map_sigmoid(const double* x, double* y, std::size_t n);
void map_tanh(const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* y, std::size_t n);
void vsub(const double* a, const double* b, double* y, std::size_t n);
void vmul(const double* a, const double* b, double* y, std::size_t n);
void vaffine(const double* a, double m, double c, double* y, std::size_t n);

} // namespace openmp

// Size-dispatching entry points used by the tensor layer.
void matvec(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matvec_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
void matmul(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
            std::size_t k);
void outer_acc(double* a, const double* x, const double* y, std::size_t m, std::size_t n);
void map_sigmoid(const double* x, double* y, std::size_t n);
void map_tanh(const double* x, double* y, std::size_t n);
void vadd(const double* a, const double* b, double* y, std::size_t n);
void vsub(const double* a, const double* b, double* y, std::size_t n);
void vmul(const double* a, const double* b, double* y, std::size_t n);
void vaffine(const double* a, double m, double c, double* y, std::size_t n);

} // namespace vnsgru::kernels
