#include <atomic>
#include <stdexcept>
#include <string>

#include "stack_order/simd/kernels.hpp"

namespace stack_order::simd {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
      // Advanced SIMD is mandatory on AArch64.
      return neon_kernels() != nullptr;
  }
  return false;
}

Isa best_available() {
  if (cpu_supports(Isa::Avx2)) return Isa::Avx2;
  if (cpu_supports(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
      return avx2_kernels();
    case Isa::Neon:
      return neon_kernels();
  }
  return nullptr;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{table_for(best_available())};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("simd::select: " + std::string(isa_name(isa)) + " is not supported on this CPU");
  }
  slot().store(table_for(isa), std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace stack_order::simd
