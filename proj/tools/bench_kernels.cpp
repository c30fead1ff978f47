// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference kernels against their OpenMP counterparts on
// decoder-shaped workloads and checks the outputs stay bit-identical. On a
// single-core machine the parallel column should simply track the serial
// one; the point of running it there is the identity check and the team
// overhead measurement.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vnsgru/kernels.hpp"
#include "vnsgru/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> random_vec(std::size_t n, vnsgru::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Case {
  std::string name;
  std::size_t m, n, k;
};

void bench_matmul(const Case& c, vnsgru::Rng& rng, int reps) {
  const std::vector<double> a = random_vec(c.m * c.n, rng);
  const std::vector<double> b = random_vec(c.n * c.k, rng);
  std::vector<double> serial_out(c.m * c.k), omp_out(c.m * c.k);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    vnsgru::kernels::serial::matmul(a.data(), b.data(), serial_out.data(), c.m, c.n, c.k);
  const double ts = seconds_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    vnsgru::kernels::openmp::matmul(a.data(), b.data(), omp_out.data(), c.m, c.n, c.k);
  const double tp = seconds_since(t0) / reps;

  const bool same = bit_equal(serial_out, omp_out);
  std::printf("%-28s %10.3f us %10.3f us %7.2fx  %s\n", c.name.c_str(), ts * 1e6,
              tp * 1e6, ts / tp, same ? "bit-equal" : "MISMATCH");
}

void bench_map(const char* name, std::size_t n, vnsgru::Rng& rng, int reps) {
  const std::vector<double> x = random_vec(n, rng);
  std::vector<double> serial_out(n), omp_out(n);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    vnsgru::kernels::serial::map_tanh(x.data(), serial_out.data(), n);
  const double ts = seconds_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    vnsgru::kernels::openmp::map_tanh(x.data(), omp_out.data(), n);
  const double tp = seconds_since(t0) / reps;

  const bool same = bit_equal(serial_out, omp_out);
  std::printf("%-28s %10.3f us %10.3f us %7.2fx  %s\n", name, ts * 1e6, tp * 1e6,
              ts / tp, same ? "bit-equal" : "MISMATCH");
}

} // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp not compiled in; both columns run the serial path\n");
#endif
  std::printf("%-28s %13s %13s %8s\n", "case", "serial", "parallel", "speedup");

  vnsgru::Rng rng(42);
  bench_matmul({"matmul 64x64x64 (gate)", 64, 64, 64}, rng, 200);
  bench_matmul({"matmul 256x256x256", 256, 256, 256}, rng, 20);
  bench_matmul({"matmul 512x512x512", 512, 512, 512}, rng, 5);
  bench_matmul({"matvec-shaped 4096x4096x1", 4096, 4096, 1}, rng, 20);
  bench_map("tanh 1k", 1u << 10, rng, 2000);
  bench_map("tanh 1M", 1u << 20, rng, 20);
  return 0;
}
