#pragma once

// Small bitvector solver over `Expr`: interval extraction from simple
// comparisons, exhaustive enumeration when the variable domains are small,
// guided sampling otherwise.

#include <chrono>
#include <optional>
#include <vector>

#include "bootkeeper/expr.hpp"

namespace bootkeeper {

enum class SolveStatus {
  Values,   // `values` is exact (or `capped` with cap+1 witnesses)
  Unsat,
  Unknown,  // `values` holds the witnesses found so far
};

struct SolveResult {
  SolveStatus status = SolveStatus::Unknown;
  std::vector<uint32_t> values;  // sorted, distinct
  bool capped = false;           // more than `cap` solutions exist
};

struct SolverLimits {
  uint64_t enumeration_limit = 1u << 18;  // max assignments tried exhaustively
  uint32_t samples = 4096;
};

// Values `expr` can take under the conjunction `constraints` (each must be
// non-zero). At most cap+1 values are returned; `capped` marks overflow.
SolveResult solve(const std::vector<Expr>& constraints, const Expr& expr, size_t cap,
                  const SolverLimits& limits = {});

enum class Sat { Yes, No, Unknown };
Sat check_sat(const std::vector<Expr>& constraints, const SolverLimits& limits = {});

}  // namespace bootkeeper
