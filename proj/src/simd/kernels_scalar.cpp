#include "stack_order/simd/kernels.hpp"

#include <algorithm>

namespace stack_order::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] - b[k];
}

void relu(const double* x, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = std::max(x[k], 0.0);
}

void relu_backward(const double* x, const double* grad_out, double* grad_in, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (x[k] > 0.0) grad_in[k] += grad_out[k];
  }
}

constexpr KernelTable kScalar{dot, axpy, sub, relu, relu_backward, Isa::Scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace stack_order::simd
