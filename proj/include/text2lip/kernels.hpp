#pragma once

namespace t2l::kernels {

// Thread count used by the *_omp kernels and by the dispatching wrappers.
// 0 means "use the OpenMP default". The parallel kernels split work across
// independent output rows and run the exact same per-row routine as the
// serial reference, so results are bitwise identical for any thread count.
void set_num_threads(int n);
int num_threads();

// C (m x n) = A (m x k) * B (k x n), all row-major.
// accumulate=true adds into C instead of overwriting.
void matmul_ref(const double* A, const double* B, double* C, int m, int k,
                int n, bool accumulate = false);
void matmul_omp(const double* A, const double* B, double* C, int m, int k,
                int n, bool accumulate = false);
void matmul(const double* A, const double* B, double* C, int m, int k, int n,
            bool accumulate = false);

// C (m x n) = A (m x k) * B^T, with B stored (n x k) row-major.
void matmul_transb_ref(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate = false);
void matmul_transb_omp(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate = false);
void matmul_transb(const double* A, const double* B, double* C, int m, int k,
                   int n, bool accumulate = false);

// C (k x n) = A^T * B, with A stored (m x k) and B stored (m x n) row-major.
void matmul_transa_ref(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate = false);
void matmul_transa_omp(const double* A, const double* B, double* C, int m,
                       int k, int n, bool accumulate = false);
void matmul_transa(const double* A, const double* B, double* C, int m, int k,
                   int n, bool accumulate = false);

}  // namespace t2l::kernels
