#pragma once

// Backward slicing over the recovered supergraph and per-path reaching
// definitions.
//
// Registers use context-insensitive reaching definitions. Memory is
// flow-insensitive: a load depends on every store whose address may overlap,
// where addresses are known only when they fold to constants.

#include <optional>
#include <set>
#include <vector>

#include "bootkeeper/cfg.hpp"
#include "bootkeeper/symex.hpp"

namespace bootkeeper {

struct SliceCriterion {
  uint32_t instr_addr = 0;
  uint8_t reg = 0;  // operand register whose value is sliced
};

struct Slice {
  std::set<uint32_t> instructions;
  std::set<uint32_t> entry_functions;
};

// Throws Error(IncompleteCfg) when the criterion is not in a recovered block.
Slice backward_slice(const FirmwareImage& image, const Cfg& cfg, const SliceCriterion& criterion);

enum class LocKind { Reg, Mem };

struct UseRecord {
  uint64_t step = 0;
  uint32_t instr_addr = 0;
  LocKind kind = LocKind::Reg;
  uint32_t location = 0;  // register index or first byte address
  unsigned size = 4;
  std::array<ByteTags, 4> tags{};

  std::set<DefSite> defs() const;  // distinct `last` over the used bytes
};

struct DefUseMap {
  std::vector<UseRecord> uses;
  std::vector<TpmStoreUse> tpm_stores;

  // Uses at `instr_addr` of the given location (register index or address).
  std::vector<const UseRecord*> at(uint32_t instr_addr, LocKind kind, uint32_t location) const;
};

// Replays `path` (block starts) from `start` (reset state at the first block
// when absent). Throws Error(InvalidPath) if consecutive blocks are not
// connected in `cfg` or the path is infeasible.
DefUseMap reaching_defs(const FirmwareImage& image, const Cfg& cfg, const std::vector<uint32_t>& path,
                        std::optional<SymState> start = std::nullopt);

}  // namespace bootkeeper
