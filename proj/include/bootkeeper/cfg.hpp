#pragma once

// Control-flow recovery by recursive disassembly from the entry point.
// Indirect transfers are resolved by symbolically executing short backward
// paths; RET blocks are linked to the return sites of their callers.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bootkeeper/isa.hpp"
#include "bootkeeper/symex.hpp"

namespace bootkeeper {

enum class Terminator { Fallthrough, Jump, Branch, Call, Indirect, Ret, Halt };
enum class EdgeKind { Fallthrough, Jump, Branch, Call, ReturnSite, IndirectResolved, Ret };

const char* terminator_name(Terminator t);
const char* edge_kind_name(EdgeKind k);

struct BasicBlock {
  uint32_t start = 0;
  uint32_t length = 0;
  std::vector<Instruction> instructions;
  Terminator terminator = Terminator::Fallthrough;
  bool decode_error = false;  // block was cut short by an undecodable successor

  uint32_t end() const { return start + length; }
  const Instruction& last() const { return instructions.back(); }
  bool is_call() const;  // CALL or CALLR
};

struct CfgEdge {
  uint32_t src = 0;
  uint32_t dst = 0;
  EdgeKind kind = EdgeKind::Fallthrough;
  auto operator<=>(const CfgEdge&) const = default;
};

struct Function {
  uint32_t entry = 0;
  std::set<uint32_t> blocks;      // intra-procedural body
  std::set<uint32_t> callees;     // direct and resolved indirect call targets
  std::set<uint32_t> call_sites;  // caller blocks (ending in CALL/CALLR)
};

struct Cfg {
  std::map<uint32_t, BasicBlock> nodes;
  std::set<CfgEdge> edges;
  uint32_t entry = 0;
  std::set<uint32_t> unresolved;     // indirect blocks without a complete target set
  std::set<uint32_t> decode_errors;  // addresses that could not be decoded
  std::map<uint32_t, Function> functions;

  const BasicBlock* block_at(uint32_t start) const;
  const BasicBlock* block_containing(uint32_t addr) const;
  std::vector<CfgEdge> out_edges(uint32_t block) const;
  std::vector<CfgEdge> in_edges(uint32_t block) const;
  // Functions whose body contains `block`.
  std::vector<uint32_t> functions_of(uint32_t block) const;
};

struct CfgOptions {
  size_t indirect_cap = 64;
  unsigned path_depth = 8;    // blocks per backward path
  size_t max_paths = 512;     // backward paths per indirect block
  std::optional<Clock::time_point> deadline;
};

// Throws Error(AnalysisTimeout) when the deadline passes.
Cfg recover_cfg(const FirmwareImage& image, const CfgOptions& options = {});

// Target set of an indirect block, or empty after adding it to cfg.unresolved.
std::set<uint32_t> resolve_indirect(const FirmwareImage& image, Cfg& cfg, const BasicBlock& block,
                                    const CfgOptions& options = {});

std::vector<AddressRange> reachable_blocks(const Cfg& cfg);

std::string to_dot(const Cfg& cfg);

}  // namespace bootkeeper
