#pragma once

// Dense double-precision inner loops used by the tape operations.
//
// Every kernel has a portable scalar reference implementation. Vectorized
// variants (AVX2+FMA on x86-64, NEON on AArch64) are compiled into separate
// translation units and picked once at startup from the running CPU's
// capabilities. Reductions in the vector paths use a different summation
// order than the scalar path, so results agree to rounding, not bitwise.

#include <cstddef>
#include <string_view>

namespace stack_order::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[k] = a[k] - b[k]
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  // out[k] = max(x[k], 0)
  void (*relu)(const double* x, double* out, std::size_t n);
  // grad_in[k] += x[k] > 0 ? grad_out[k] : 0
  void (*relu_backward)(const double* x, const double* grad_out, double* grad_in, std::size_t n);
  Isa isa;
};

const KernelTable& scalar_kernels();

// Null when the variant was not compiled for this target.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

bool cpu_supports(Isa isa);

// The table used by the numeric core. Defaults to the best ISA the CPU
// supports; select() overrides it process-wide (tests, benchmarks).
const KernelTable& active();
void select(Isa isa);
Isa best_available();

std::string_view isa_name(Isa isa);

}  // namespace stack_order::simd
