// Times the serial matmul references against the row-parallel versions at
// transformer-shaped sizes and reports the speedup. Run with an optional
// thread count argument, e.g. `bench_kernels 4`.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "text2lip/kernels.hpp"
#include "text2lip/rng.hpp"

using namespace t2l;

namespace {
using KernelFn = void (*)(const double*, const double*, double*, int, int,
                          int, bool);

double time_ms(KernelFn fn, const double* A, const double* B, double* C,
               int m, int k, int n, int reps) {
  fn(A, B, C, m, k, n, false);  // warm up
  auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn(A, B, C, m, k, n, false);
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

struct Shape {
  const char* note;
  int m, k, n;
};
}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) kernels::set_num_threads(std::atoi(argv[1]));

  // attention projections, score matrices, and output heads at working size
  const Shape shapes[] = {
      {"proj  (75x512 * 512x512)", 75, 512, 512},
      {"score (512x64 * 64x512)", 512, 64, 512},
      {"head  (75x512 * 512x136)", 75, 512, 136},
      {"big   (512x512 * 512x512)", 512, 512, 512},
  };
  struct Variant {
    const char* name;
    KernelFn ref, omp;
  };
  const Variant variants[] = {
      {"matmul", kernels::matmul_ref, kernels::matmul_omp},
      {"matmul_transb", kernels::matmul_transb_ref, kernels::matmul_transb_omp},
      {"matmul_transa", kernels::matmul_transa_ref, kernels::matmul_transa_omp},
  };

  std::printf("threads: %d\n", kernels::num_threads());
  std::printf("%-14s %-26s %10s %10s %8s\n", "kernel", "shape", "ref ms",
              "omp ms", "speedup");
  Rng rng(1234);
  for (const Variant& v : variants) {
    for (const Shape& s : shapes) {
      // sized for the largest operand layout across the three variants
      std::size_t wide = static_cast<std::size_t>(std::max(s.m, s.k)) * s.n;
      std::vector<double> A(static_cast<std::size_t>(s.m) * s.k);
      std::vector<double> B(wide);
      std::vector<double> C(wide);
      for (auto& x : A) x = rng.normal();
      for (auto& x : B) x = rng.normal();
      int reps = s.m * s.k >= 512 * 512 ? 3 : 10;
      double ref = time_ms(v.ref, A.data(), B.data(), C.data(), s.m, s.k, s.n, reps);
      double omp = time_ms(v.omp, A.data(), B.data(), C.data(), s.m, s.k, s.n, reps);
      std::printf("%-14s %-26s %10.3f %10.3f %7.2fx\n", v.name, s.note, ref,
                  omp, ref / omp);
    }
  }
  return 0;
}
