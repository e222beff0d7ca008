#include "text2lip/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace t2l::kernels {

namespace {
int g_threads = 0;  // 0 = OpenMP default

// Per-output-row routines shared by the serial and OpenMP variants. Kept
// noinline so both variants execute the identical instruction stream and
// produce bitwise-equal results.

__attribute__((noinline, noclone)) void matmul_row(const double* A, const double* B,
                                          double* C, int i, int k, int n,
                                          bool accumulate) {
  double* c = C + static_cast<long>(i) * n;
  if (!accumulate)
    for (int j = 0; j < n; ++j) c[j] = 0.0;
  const double* a = A + static_cast<long>(i) * k;
  for (int l = 0; l < k; ++l) {
    const double al = a[l];
    const double* b = B + static_cast<long>(l) * n;
    for (int j = 0; j < n; ++j) c[j] += al * b[j];
  }
}

__attribute__((noinline, noclone)) void matmul_transb_row(const double* A,
                                                 const double* B, double* C,
                                                 int i, int k, int n,
                                                 bool accumulate) {
  const double* a = A + static_cast<long>(i) * k;
  double* c = C + static_cast<long>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* b = B + static_cast<long>(j) * k;
    double s = 0.0;
    for (int l = 0; l < k; ++l) s += a[l] * b[l];
    if (accumulate)
      c[j] += s;
    else
      c[j] = s;
  }
}

// output row l of C (k x n): C[l,:] = sum_i A[i,l] * B[i,:]
__attribute__((noinline, noclone)) void matmul_transa_row(const double* A,
                                                 const double* B, double* C,
                                                 int l, int m, int k, int n,
                                                 bool accumulate) {
  double* c = C + static_cast<long>(l) * n;
  if (!accumulate)
    for (int j = 0; j < n; ++j) c[j] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double ail = A[static_cast<long>(i) * k + l];
    const double* b = B + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) c[j] += ail * b[j];
  }
}

int effective_threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

void set_num_threads(int n) { g_threads = n < 0 ? 0 : n; }
int num_threads() { return effective_threads(); }

void matmul_ref(const double* A, const double* B, double* C, int m, int k,
                int n, bool accumulate) {
  for (int i = 0; i < m; ++i) matmul_row(A, B, C, i, k, n, accumulate);
}

void matmul_omp(const double* A, const double* B, double* C, int m, int k,
                int n, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int i = 0; i < m; ++i) matmul_row(A, B, C, i, k, n, accumulate);
}

void matmul(const double* A, const double* B, double* C, int m, int k, int n,
            bool accumulate) {
  if (effective_threads() > 1 && m > 1)
    matmul_omp(A, B, C, m, k, n, accumulate);
  else
    matmul_ref(A, B, C, m, k, n, accumulate);
}

void matmul_transb_ref(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate) {
  for (int i = 0; i < m; ++i) matmul_transb_row(A, B, C, i, k, n, accumulate);
}

void matmul_transb_omp(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int i = 0; i < m; ++i) matmul_transb_row(A, B, C, i, k, n, accumulate);
}

void matmul_transb(const double* A, const double* B, double* C, int m, int k,
                   int n, bool accumulate) {
  if (effective_threads() > 1 && m > 1)
    matmul_transb_omp(A, B, C, m, k, n, accumulate);
  else
    matmul_transb_ref(A, B, C, m, k, n, accumulate);
}

void matmul_transa_ref(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate) {
  for (int l = 0; l < k; ++l) matmul_transa_row(A, B, C, l, m, k, n, accumulate);
}

void matmul_transa_omp(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate) {
#pragma omp parallel for schedule(static) num_threads(effective_threads())
  for (int l = 0; l < k; ++l) matmul_transa_row(A, B, C, l, m, k, n, accumulate);
}

void matmul_transa(const double* A, const double* B, double* C, int m, int k,
                   int n, bool accumulate) {
  if (effective_threads() > 1 && k > 1)
    matmul_transa_omp(A, B, C, m, k, n, accumulate);
  else
    matmul_transa_ref(A, B, C, m, k, n, accumulate);
}

}  // namespace t2l::kernels
