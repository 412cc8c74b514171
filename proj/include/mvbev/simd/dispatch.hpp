#pragma once

#include <string_view>

namespace mvbev::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// True when the running CPU and this build both support `isa`.
bool isa_available(Isa isa);

/// Best available ISA, unless overridden by set_isa_override() or the
/// MVBEV_ISA environment variable ("scalar" / "avx2").
Isa active_isa();

/// Forces a kernel family; an unavailable ISA falls back to scalar.
void set_isa_override(Isa isa);
void clear_isa_override();

}  // namespace mvbev::simd
