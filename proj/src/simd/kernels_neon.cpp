#include "stack_order/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace stack_order::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(out + k, vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
  for (; k < n; ++k) out[k] = a[k] - b[k];
}

void relu(const double* x, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(out + k, vmaxq_f64(vld1q_f64(x + k), zero));
  for (; k < n; ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
}

void relu_backward(const double* x, const double* grad_out, double* grad_in, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    uint64x2_t mask = vcgtq_f64(vld1q_f64(x + k), zero);
    float64x2_t g = vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(vld1q_f64(grad_out + k))));
    vst1q_f64(grad_in + k, vaddq_f64(vld1q_f64(grad_in + k), g));
  }
  for (; k < n; ++k) {
    if (x[k] > 0.0) grad_in[k] += grad_out[k];
  }
}

constexpr KernelTable kNeon{dot, axpy, sub, relu, relu_backward, Isa::Neon};

}  // namespace

const KernelTable* neon_kernels() { return &kNeon; }

}  // namespace stack_order::simd

#else

namespace stack_order::simd {
const KernelTable* neon_kernels() { return nullptr; }
}  // namespace stack_order::simd

#endif
