#pragma once

// Operator-level data-flow graphs of straight-line code fragments.
//
// Each basic block is translated separately: registers read before being
// written become input slots, loads become load slots, stored values,
// branch conditions and computed live-out registers become roots. Nodes are
// kept in topological order (operands precede users).

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bootkeeper/cfg.hpp"
#include "bootkeeper/expr.hpp"
#include "bootkeeper/isa.hpp"

namespace bootkeeper {

enum class DfgKind : uint8_t { Input, Load, Const, Op, Branch };

const char* dfg_kind_name(DfgKind k);
const char* dfg_op_name(ExprOp op);

struct DfgNode {
  DfgKind kind = DfgKind::Const;
  ExprOp op = ExprOp::Const;  // operator for Op, comparison for Branch
  uint32_t value = 0;         // constant value, or slot id for Input/Load
  std::vector<uint32_t> operands;
  uint32_t block = 0;         // block the node was built from (informational)

  bool is_leaf() const { return kind == DfgKind::Input || kind == DfgKind::Load; }
  bool operator==(const DfgNode& o) const {
    return kind == o.kind && op == o.op && value == o.value && operands == o.operands;
  }
};

struct Dfg {
  std::vector<DfgNode> nodes;
  std::vector<uint32_t> roots;

  bool operator==(const Dfg& o) const { return nodes == o.nodes && roots == o.roots; }
  // Throws std::logic_error when operands are out of order or arities are wrong.
  void check() const;
};

bool is_commutative(ExprOp op);
bool is_associative(ExprOp op);  // ADD, AND, OR, XOR (n-ary after normalization)

// Blocks are split at control transfers and at branch targets inside the
// sequence.
Dfg build_dfg(std::span<const Instruction> instructions);
// One fragment per block of `blocks`, in ascending address order.
Dfg build_dfg(const Cfg& cfg, const std::set<uint32_t>& blocks);

Dfg normalize(const Dfg& g);
// Keeps the nodes reachable from the roots, in depth-first post-order.
Dfg prune(const Dfg& g);

// Root values for the given leaf assignment (leaves are looked up by node).
std::vector<uint32_t> evaluate(const Dfg& g, const std::function<uint32_t(const DfgNode&)>& leaf);

// Loop-guard iteration bounds: for each branch comparing `x + S` against a
// constant L (S dividing L), the value L / S.
std::set<uint32_t> loop_bounds(const Dfg& g);

std::string to_string(const Dfg& g);

}  // namespace bootkeeper
