// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "stack_order/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace stack_order::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  }
  for (; k < n; ++k) out[k] = a[k] - b[k];
}

void relu(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_max_pd(_mm256_loadu_pd(x + k), zero));
  }
  for (; k < n; ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
}

void relu_backward(const double* x, const double* grad_out, double* grad_in, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + k), zero, _CMP_GT_OQ);
    __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(grad_out + k));
    _mm256_storeu_pd(grad_in + k, _mm256_add_pd(_mm256_loadu_pd(grad_in + k), g));
  }
  for (; k < n; ++k) {
    if (x[k] > 0.0) grad_in[k] += grad_out[k];
  }
}

constexpr KernelTable kAvx2{dot, axpy, sub, relu, relu_backward, Isa::Avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2; }

}  // namespace stack_order::simd

#else

namespace stack_order::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace stack_order::simd

#endif
