#include "mvbev/simd/dispatch.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "mvbev/simd/warp_kernels.hpp"

namespace mvbev::simd {

namespace {

// -1 = no override, otherwise static_cast<int>(Isa).
std::atomic<int> g_override{-1};

Isa detect_best() {
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  return Isa::Scalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MVBEV_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced >= 0) {
    const auto isa = static_cast<Isa>(forced);
    return isa_available(isa) ? isa : Isa::Scalar;
  }
  static const Isa from_env = [] {
    const char* env = std::getenv("MVBEV_ISA");
    if (env != nullptr) {
      const std::string value(env);
      if (value == "scalar") return Isa::Scalar;
      if (value == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
    }
    return detect_best();
  }();
  return from_env;
}

void set_isa_override(Isa isa) { g_override.store(static_cast<int>(isa)); }

void clear_isa_override() { g_override.store(-1); }

void warp_rows(const WarpParams& p, const double* src, double* dst, int row_begin, int row_end) {
  switch (active_isa()) {
#if defined(MVBEV_HAVE_AVX2)
    case Isa::Avx2:
      warp_rows_avx2(p, src, dst, row_begin, row_end);
      return;
#endif
    default:
      warp_rows_scalar(p, src, dst, row_begin, row_end);
      return;
  }
}

}  // namespace mvbev::simd
