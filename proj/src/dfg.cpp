#include "bootkeeper/dfg.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "bootkeeper/error.hpp"

namespace bootkeeper {

const char* dfg_kind_name(DfgKind k) {
  switch (k) {
    case DfgKind::Input: return "input";
    case DfgKind::Load: return "load";
    case DfgKind::Const: return "const";
    case DfgKind::Op: return "op";
    case DfgKind::Branch: return "branch";
  }
  return "?";
}

const char* dfg_op_name(ExprOp op) {
  switch (op) {
    case ExprOp::Add: return "add";
    case ExprOp::Sub: return "sub";
    case ExprOp::And: return "and";
    case ExprOp::Or: return "or";
    case ExprOp::Xor: return "xor";
    case ExprOp::Shl: return "shl";
    case ExprOp::Shr: return "shr";
    case ExprOp::Rol: return "rol";
    case ExprOp::Eq: return "eq";
    case ExprOp::Ne: return "ne";
    case ExprOp::Ult: return "ult";
    case ExprOp::Uge: return "uge";
    default: return "";
  }
}

bool is_commutative(ExprOp op) {
  return op == ExprOp::Add || op == ExprOp::And || op == ExprOp::Or || op == ExprOp::Xor;
}
bool is_associative(ExprOp op) { return is_commutative(op); }

void Dfg::check() const {
  for (size_t i = 0; i < nodes.size(); ++i) {
    const DfgNode& n = nodes[i];
    for (uint32_t o : n.operands)
      if (o >= i) throw std::logic_error("dfg node " + std::to_string(i) + " is not topologically ordered");
    size_t want_min = 0, want_max = 0;
    switch (n.kind) {
      case DfgKind::Input:
      case DfgKind::Load:
      case DfgKind::Const: break;
      case DfgKind::Branch:
        if (!is_comparison(n.op)) throw std::logic_error("branch node without comparison");
        want_min = want_max = 2;
        break;
      case DfgKind::Op:
        want_min = 2;
        want_max = is_associative(n.op) ? SIZE_MAX : 2;
        break;
    }
    if (n.operands.size() < want_min || n.operands.size() > want_max)
      throw std::logic_error("dfg node " + std::to_string(i) + " has wrong arity");
  }
  for (uint32_t r : roots)
    if (r >= nodes.size()) throw std::logic_error("dfg root out of range");
}

namespace {

uint32_t apply(ExprOp op, uint32_t a, uint32_t b) { return const_value(mk_bin(op, mk_const(a), mk_const(b))); }

ExprOp alu_op(Opcode op) {
  switch (op) {
    case Opcode::ADD: case Opcode::ADDI: return ExprOp::Add;
    case Opcode::SUB: case Opcode::SUBI: return ExprOp::Sub;
    case Opcode::AND: case Opcode::ANDI: return ExprOp::And;
    case Opcode::OR: case Opcode::ORI: return ExprOp::Or;
    case Opcode::XOR: case Opcode::XORI: return ExprOp::Xor;
    case Opcode::SHL: case Opcode::SHLI: return ExprOp::Shl;
    case Opcode::SHR: case Opcode::SHRI: return ExprOp::Shr;
    default: return ExprOp::Rol;
  }
}

ExprOp branch_op(Opcode op) {
  switch (op) {
    case Opcode::BEQ: return ExprOp::Eq;
    case Opcode::BNE: return ExprOp::Ne;
    case Opcode::BLTU: return ExprOp::Ult;
    default: return ExprOp::Uge;
  }
}

class RawBuilder {
 public:
  Dfg g;

  void block(std::span<const Instruction> body) {
    if (body.empty()) return;
    block_ = body.front().addr;
    std::array<int64_t, kNumRegs> regs;
    regs.fill(-1);
    std::array<int64_t, kNumRegs> input{};
    input.fill(-1);
    struct Key {
      int64_t base;
      uint32_t offset;
      auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::pair<uint32_t, unsigned>> mem;  // value node, size

    auto get = [&](uint8_t r) -> uint32_t {
      if (regs[r] < 0) {
        regs[r] = add({DfgKind::Input, ExprOp::Const, next_slot_++, {}});
        input[r] = regs[r];
      }
      return static_cast<uint32_t>(regs[r]);
    };
    auto key_of = [&](const Instruction& in) {
      const uint32_t base = get(in.rs1);
      if (g.nodes[base].kind == DfgKind::Const) return Key{-1, g.nodes[base].value + in.imm};
      return Key{base, in.imm};
    };

    for (const auto& in : body) {
      switch (format_of(in.opcode)) {
        case Format::RdImm: regs[in.rd] = constant(in.imm); break;
        case Format::RdRs: regs[in.rd] = get(in.rs1); break;
        case Format::RdRsRs: {
          const uint32_t a = get(in.rs1), b = get(in.rs2);
          regs[in.rd] = add({DfgKind::Op, alu_op(in.opcode), 0, {a, b}});
          break;
        }
        case Format::RdRsImm: {
          const uint32_t a = get(in.rs1), b = constant(in.imm);
          regs[in.rd] = add({DfgKind::Op, alu_op(in.opcode), 0, {a, b}});
          break;
        }
        case Format::Load: {
          const Key k = key_of(in);
          const unsigned size = in.opcode == Opcode::LOAD ? 4 : 1;
          auto it = mem.find(k);
          if (it != mem.end() && it->second.second == size) {
            regs[in.rd] = it->second.first;
          } else if (it != mem.end() && size == 1) {
            regs[in.rd] = add({DfgKind::Op, ExprOp::And, 0, {it->second.first, constant(0xFF)}});
          } else {
            regs[in.rd] = add({DfgKind::Load, ExprOp::Const, next_load_++, {}});
          }
          break;
        }
        case Format::Store: {
          const Key k = key_of(in);
          const unsigned size = in.opcode == Opcode::STORE ? 4 : 1;
          uint32_t v = get(in.rs2);
          for (auto it = mem.begin(); it != mem.end();) {
            const bool same_base = it->first.base == k.base;
            const bool disjoint = same_base && (it->first.offset + it->second.second <= k.offset ||
                                                k.offset + size <= it->first.offset);
            const bool both_const = it->first.base < 0 && k.base < 0;
            if ((same_base || !both_const) && !disjoint) it = mem.erase(it);
            else ++it;
          }
          mem[k] = {v, size};
          g.roots.push_back(v);
          break;
        }
        case Format::Branch: {
          const uint32_t a = get(in.rs1), b = get(in.rs2);
          g.roots.push_back(add({DfgKind::Branch, branch_op(in.opcode), 0, {a, b}}));
          break;
        }
        default: break;
      }
    }
    for (size_t r = 0; r < kNumRegs; ++r) {
      if (regs[r] < 0 || regs[r] == input[r]) continue;
      const DfgKind k = g.nodes[static_cast<size_t>(regs[r])].kind;
      if (k == DfgKind::Op || k == DfgKind::Const) g.roots.push_back(static_cast<uint32_t>(regs[r]));
    }
  }

 private:
  uint32_t add(DfgNode n) {
    n.block = block_;
    g.nodes.push_back(std::move(n));
    return static_cast<uint32_t>(g.nodes.size() - 1);
  }
  uint32_t constant(uint32_t v) { return add({DfgKind::Const, ExprOp::Const, v, {}}); }

  uint32_t block_ = 0;
  uint32_t next_slot_ = 0;
  uint32_t next_load_ = 0;
};

uint64_t mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h * 0xff51afd7ed558ccdull;
}

// Hash-consing builder applying the local rewrite rules.
class NormBuilder {
 public:
  Dfg g;
  std::vector<uint64_t> hash;

  uint32_t leaf(const DfgNode& n) { return intern({n.kind, ExprOp::Const, n.value, {}, n.block}); }
  uint32_t constant(uint32_t v) { return intern({DfgKind::Const, ExprOp::Const, v, {}, 0}); }

  bool is_const(uint32_t id) const { return g.nodes[id].kind == DfgKind::Const; }
  uint32_t cval(uint32_t id) const { return g.nodes[id].value; }
  bool is_op(uint32_t id, ExprOp op) const { return g.nodes[id].kind == DfgKind::Op && g.nodes[id].op == op; }

  uint32_t branch(ExprOp op, uint32_t a, uint32_t b, uint32_t blk) {
    return intern({DfgKind::Branch, op, 0, {a, b}, blk});
  }

  uint32_t op(ExprOp op, std::vector<uint32_t> ops, uint32_t blk) {
    if (op == ExprOp::Sub) {
      const uint32_t a = ops[0], b = ops[1];
      if (is_const(a) && is_const(b)) return constant(cval(a) - cval(b));
      if (is_const(b)) return this->op(ExprOp::Add, {a, constant(0u - cval(b))}, blk);
      if (a == b) return constant(0);
      return intern({DfgKind::Op, op, 0, {a, b}, blk});
    }
    if (op == ExprOp::Shl || op == ExprOp::Shr || op == ExprOp::Rol) {
      const uint32_t a = ops[0], b = ops[1];
      if (is_const(a) && is_const(b)) return constant(apply(op, cval(a), cval(b)));
      if (is_const(b)) {
        const uint32_t c = cval(b) & 31;
        if (c == 0) return a;
        if (op == ExprOp::Rol && is_op(a, ExprOp::Rol) && is_const(g.nodes[a].operands[1])) {
          const uint32_t inner = g.nodes[a].operands[0];
          return this->op(ExprOp::Rol, {inner, constant((cval(g.nodes[a].operands[1]) + c) & 31)}, blk);
        }
        if (c != cval(b)) ops[1] = constant(c);
      }
      return intern({DfgKind::Op, op, 0, ops, blk});
    }
    // Associative-commutative operators.
    const uint32_t identity = op == ExprOp::And ? 0xFFFFFFFFu : 0u;
    uint32_t acc = identity;
    std::vector<uint32_t> rest;
    for (uint32_t o : ops) {
      if (is_const(o)) acc = apply(op, acc, cval(o));
      else rest.push_back(o);
    }
    if (op == ExprOp::And && acc == 0) return constant(0);
    if (op == ExprOp::Or && acc == 0xFFFFFFFFu) return constant(acc);
    if (op == ExprOp::Or || op == ExprOp::Add || op == ExprOp::Xor) fuse_rotations(rest, blk);
    if (acc != identity || rest.empty()) rest.push_back(constant(acc));
    if (rest.size() == 1) return rest[0];
    std::sort(rest.begin(), rest.end(), [&](uint32_t x, uint32_t y) {
      return hash[x] != hash[y] ? hash[x] < hash[y] : x < y;
    });
    return intern({DfgKind::Op, op, 0, rest, blk});
  }

 private:
  // (x << k) op (x >> 32-k) with disjoint bits is a rotation.
  void fuse_rotations(std::vector<uint32_t>& rest, uint32_t blk) {
    for (bool changed = true; changed;) {
      changed = false;
      for (size_t i = 0; i < rest.size() && !changed; ++i) {
        const DfgNode& l = g.nodes[rest[i]];
        if (!(l.kind == DfgKind::Op && l.op == ExprOp::Shl && is_const(l.operands[1]))) continue;
        const uint32_t k = cval(l.operands[1]) & 31;
        for (size_t j = 0; j < rest.size(); ++j) {
          const DfgNode& r = g.nodes[rest[j]];
          if (!(r.kind == DfgKind::Op && r.op == ExprOp::Shr && is_const(r.operands[1]))) continue;
          if ((cval(r.operands[1]) & 31) != 32 - k || r.operands[0] != l.operands[0]) continue;
          const uint32_t rot = op(ExprOp::Rol, {l.operands[0], constant(k)}, blk);
          const uint32_t a = rest[i], b = rest[j];
          std::erase(rest, a);
          std::erase(rest, b);
          rest.push_back(rot);
          changed = true;
          break;
        }
      }
    }
  }

  uint32_t intern(DfgNode n) {
    auto key = std::make_tuple(n.kind, n.op, n.value, n.operands, n.is_leaf() ? n.block : 0u);
    if (auto it = cse_.find(key); it != cse_.end()) return it->second;
    uint64_t h = mix(static_cast<uint64_t>(n.kind) + 1, static_cast<uint64_t>(n.op));
    if (n.kind != DfgKind::Op && n.kind != DfgKind::Branch) h = mix(h, n.value);
    for (uint32_t o : n.operands) h = mix(h, hash[o]);
    g.nodes.push_back(std::move(n));
    hash.push_back(h);
    const auto id = static_cast<uint32_t>(g.nodes.size() - 1);
    cse_.emplace(std::move(key), id);
    return id;
  }

  std::map<std::tuple<DfgKind, ExprOp, uint32_t, std::vector<uint32_t>, uint32_t>, uint32_t> cse_;
};

// Re-emits the nodes reachable from the roots in depth-first post-order.
Dfg canonical_order(const Dfg& g) {
  Dfg out;
  std::vector<int64_t> map(g.nodes.size(), -1);
  for (uint32_t root : g.roots) {
    std::vector<std::pair<uint32_t, size_t>> stack{{root, 0}};
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      if (map[n] >= 0) {
        stack.pop_back();
        continue;
      }
      if (i < g.nodes[n].operands.size()) {
        const uint32_t child = g.nodes[n].operands[i++];
        if (map[child] < 0) stack.push_back({child, 0});
        continue;
      }
      DfgNode copy = g.nodes[n];
      for (auto& o : copy.operands) o = static_cast<uint32_t>(map[o]);
      map[n] = static_cast<int64_t>(out.nodes.size());
      out.nodes.push_back(std::move(copy));
      stack.pop_back();
    }
    out.roots.push_back(static_cast<uint32_t>(map[root]));
  }
  return out;
}

Dfg normalize_pass(const Dfg& g) {
  std::vector<uint32_t> uses(g.nodes.size(), 0);
  for (const auto& n : g.nodes)
    for (uint32_t o : n.operands) ++uses[o];
  for (uint32_t r : g.roots) ++uses[r];

  NormBuilder b;
  std::vector<uint32_t> map(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const DfgNode& n = g.nodes[i];
    switch (n.kind) {
      case DfgKind::Input:
      case DfgKind::Load: map[i] = b.leaf(n); break;
      case DfgKind::Const: map[i] = b.constant(n.value); break;
      case DfgKind::Branch: map[i] = b.branch(n.op, map[n.operands[0]], map[n.operands[1]], n.block); break;
      case DfgKind::Op: {
        std::vector<uint32_t> ops;
        for (uint32_t o : n.operands) {
          const DfgNode& on = g.nodes[o];
          const uint32_t m = map[o];
          if (is_associative(n.op) && on.kind == DfgKind::Op && on.op == n.op && uses[o] == 1 && b.is_op(m, n.op)) {
            const auto& inner = b.g.nodes[m].operands;
            ops.insert(ops.end(), inner.begin(), inner.end());
          } else {
            ops.push_back(m);
          }
        }
        map[i] = b.op(n.op, std::move(ops), n.block);
        break;
      }
    }
  }
  for (uint32_t r : g.roots) b.g.roots.push_back(map[r]);
  return canonical_order(b.g);
}

}  // namespace

Dfg build_dfg(std::span<const Instruction> instructions) {
  std::set<uint32_t> leaders;
  std::set<uint32_t> addrs;
  for (const auto& in : instructions) addrs.insert(in.addr);
  for (size_t i = 0; i < instructions.size(); ++i) {
    const Instruction& in = instructions[i];
    if (i == 0 || instructions[i - 1].addr + kInstrSize != in.addr || is_terminator(instructions[i - 1].opcode))
      leaders.insert(in.addr);
    if ((is_branch(in.opcode) || in.opcode == Opcode::JMP) && addrs.count(in.imm)) leaders.insert(in.imm);
  }
  RawBuilder rb;
  size_t start = 0;
  for (size_t i = 1; i <= instructions.size(); ++i) {
    if (i == instructions.size() || leaders.count(instructions[i].addr)) {
      rb.block(instructions.subspan(start, i - start));
      start = i;
    }
  }
  return rb.g;
}

Dfg build_dfg(const Cfg& cfg, const std::set<uint32_t>& blocks) {
  RawBuilder rb;
  for (uint32_t b : blocks)
    if (const BasicBlock* bb = cfg.block_at(b)) rb.block(bb->instructions);
  return rb.g;
}

Dfg prune(const Dfg& g) { return canonical_order(g); }

Dfg normalize(const Dfg& g) {
  Dfg cur = canonical_order(g);
  for (int i = 0; i < 64; ++i) {
    Dfg next = normalize_pass(cur);
    if (next == cur) return next;
    cur = std::move(next);
  }
  return cur;
}

std::vector<uint32_t> evaluate(const Dfg& g, const std::function<uint32_t(const DfgNode&)>& leaf) {
  std::vector<uint32_t> v(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const DfgNode& n = g.nodes[i];
    switch (n.kind) {
      case DfgKind::Input:
      case DfgKind::Load: v[i] = leaf(n); break;
      case DfgKind::Const: v[i] = n.value; break;
      case DfgKind::Op:
      case DfgKind::Branch: {
        uint32_t acc = v[n.operands[0]];
        for (size_t k = 1; k < n.operands.size(); ++k) acc = apply(n.op, acc, v[n.operands[k]]);
        v[i] = acc;
        break;
      }
    }
  }
  std::vector<uint32_t> out;
  for (uint32_t r : g.roots) out.push_back(v[r]);
  return out;
}

std::set<uint32_t> loop_bounds(const Dfg& g) {
  std::set<uint32_t> out;
  for (const auto& n : g.nodes) {
    if (n.kind != DfgKind::Branch) continue;
    for (int side = 0; side < 2; ++side) {
      const DfgNode& lim = g.nodes[n.operands[side]];
      const DfgNode& ctr = g.nodes[n.operands[1 - side]];
      if (lim.kind != DfgKind::Const || ctr.kind != DfgKind::Op || ctr.op != ExprOp::Add) continue;
      uint32_t step = 0;
      int consts = 0;
      for (uint32_t o : ctr.operands)
        if (g.nodes[o].kind == DfgKind::Const) {
          step = g.nodes[o].value;
          ++consts;
        }
      if (consts == 1 && step != 0 && lim.value % step == 0) out.insert(lim.value / step);
    }
  }
  return out;
}

std::string to_string(const Dfg& g) {
  std::ostringstream os;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const DfgNode& n = g.nodes[i];
    os << 'n' << i << " = ";
    switch (n.kind) {
      case DfgKind::Input: os << "input" << n.value; break;
      case DfgKind::Load: os << "load" << n.value; break;
      case DfgKind::Const: os << hex32(n.value); break;
      case DfgKind::Op:
      case DfgKind::Branch:
        os << (n.kind == DfgKind::Branch ? "branch " : "") << dfg_op_name(n.op);
        for (uint32_t o : n.operands) os << " n" << o;
        break;
    }
    os << '\n';
  }
  os << "roots:";
  for (uint32_t r : g.roots) os << " n" << r;
  os << '\n';
  return os.str();
}

}  // namespace bootkeeper
