#include "bootkeeper/dataflow.hpp"

#include <bit>
#include <deque>

#include "bootkeeper/error.hpp"

namespace bootkeeper {

std::set<DefSite> UseRecord::defs() const {
  std::set<DefSite> out;
  for (unsigned i = 0; i < size; ++i) out.insert(tags[i].last);
  return out;
}

std::vector<const UseRecord*> DefUseMap::at(uint32_t instr_addr, LocKind kind, uint32_t location) const {
  std::vector<const UseRecord*> out;
  for (const auto& u : uses)
    if (u.instr_addr == instr_addr && u.kind == kind && u.location == location) out.push_back(&u);
  return out;
}

namespace {

constexpr uint32_t kInitialDef = 0;  // never a code address

struct RegUses {
  std::vector<uint8_t> regs;
  bool mem_load = false;
};

// Registers read by `in` as data (branch operands are control, not data).
RegUses data_uses(const Instruction& in) {
  RegUses u;
  switch (format_of(in.opcode)) {
    case Format::RdRs:
    case Format::RdRsImm: u.regs = {in.rs1}; break;
    case Format::RdRsRs: u.regs = {in.rs1, in.rs2}; break;
    case Format::Load:
      u.regs = {in.rs1};
      u.mem_load = true;
      break;
    case Format::Store: u.regs = {in.rs1, in.rs2}; break;
    default: break;
  }
  if (in.opcode == Opcode::CALL || in.opcode == Opcode::CALLR || in.opcode == Opcode::RET)
    u.regs.push_back(kStackReg);
  return u;
}

std::vector<uint8_t> reg_defs(const Instruction& in) {
  std::vector<uint8_t> d;
  if (writes_rd(in.opcode)) d.push_back(in.rd);
  if (in.opcode == Opcode::CALL || in.opcode == Opcode::CALLR || in.opcode == Opcode::RET) d.push_back(kStackReg);
  return d;
}

using RegDefs = std::array<std::set<uint32_t>, kNumRegs>;

struct Analysis {
  const FirmwareImage& image;
  const Cfg& cfg;
  std::map<uint32_t, RegDefs> block_in;
  std::map<uint32_t, RegDefs> at_instr;  // reaching defs before each instruction
  std::map<uint32_t, Instruction> instrs;
  std::map<std::pair<uint32_t, uint8_t>, std::optional<uint32_t>> const_memo;
  std::set<std::pair<uint32_t, uint8_t>> in_progress;

  void run() {
    for (const auto& [start, b] : cfg.nodes) {
      block_in[start];
      for (const auto& in : b.instructions) instrs[in.addr] = in;
    }
    for (auto& s : block_in[cfg.entry]) s.insert(kInitialDef);
    std::deque<uint32_t> work;
    for (const auto& [start, _] : cfg.nodes) work.push_back(start);
    std::set<uint32_t> queued(work.begin(), work.end());
    while (!work.empty()) {
      const uint32_t b = work.front();
      work.pop_front();
      queued.erase(b);
      RegDefs cur = block_in[b];
      for (const auto& in : cfg.nodes.at(b).instructions)
        for (uint8_t r : reg_defs(in)) cur[r] = {in.addr};
      for (const auto& e : cfg.out_edges(b)) {
        RegDefs& dst = block_in[e.dst];
        bool changed = false;
        for (size_t r = 0; r < kNumRegs; ++r)
          for (uint32_t d : cur[r]) changed |= dst[r].insert(d).second;
        if (changed && queued.insert(e.dst).second) work.push_back(e.dst);
      }
    }
    for (const auto& [start, b] : cfg.nodes) {
      RegDefs cur = block_in[start];
      for (const auto& in : b.instructions) {
        at_instr[in.addr] = cur;
        for (uint8_t r : reg_defs(in)) cur[r] = {in.addr};
      }
    }
  }

  std::optional<uint32_t> def_value(uint32_t def, uint8_t reg) {
    if (def == kInitialDef) return reg == kStackReg ? kStackTop : 0u;
    const Instruction& in = instrs.at(def);
    auto operand = [&](uint8_t r) { return reg_const(def, r); };
    switch (format_of(in.opcode)) {
      case Format::RdImm: return in.imm;
      case Format::RdRs: return operand(in.rs1);
      case Format::RdRsImm:
      case Format::RdRsRs: {
        auto a = operand(in.rs1);
        if (!a) return std::nullopt;
        std::optional<uint32_t> b = in.imm;
        if (format_of(in.opcode) == Format::RdRsRs) b = operand(in.rs2);
        if (!b) return std::nullopt;
        Expr e = mk_bin(alu_expr_op(in.opcode), mk_const(*a), mk_const(*b));
        return const_value(e);
      }
      case Format::Load: {
        auto base = operand(in.rs1);
        if (!base || in.opcode != Opcode::LOAD) return std::nullopt;
        uint32_t v = 0;
        for (unsigned i = 0; i < 4; ++i) {
          auto byte = image.rom_byte(*base + in.imm + i);
          if (!byte) return std::nullopt;
          v |= uint32_t{*byte} << (8 * i);
        }
        return v;
      }
      default: return std::nullopt;
    }
  }

  static ExprOp alu_expr_op(Opcode op) {
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

  // Constant value of `reg` just before `instr`, if every reaching def agrees.
  std::optional<uint32_t> reg_const(uint32_t instr, uint8_t reg) {
    const auto key = std::make_pair(instr, reg);
    if (auto it = const_memo.find(key); it != const_memo.end()) return it->second;
    if (!in_progress.insert(key).second) return std::nullopt;
    std::optional<uint32_t> result;
    bool first = true;
    for (uint32_t d : at_instr.at(instr)[reg]) {
      auto v = def_value(d, reg);
      if (!v || (!first && *v != *result)) {
        result.reset();
        first = false;
        break;
      }
      result = v;
      first = false;
    }
    in_progress.erase(key);
    const_memo[key] = result;
    return result;
  }

  // Byte range touched by a load/store, or nullopt when unknown.
  std::optional<AddressRange> mem_range(const Instruction& in) {
    auto base = reg_const(in.addr, in.rs1);
    if (!base) return std::nullopt;
    const unsigned size = (in.opcode == Opcode::LOAD || in.opcode == Opcode::STORE) ? 4 : 1;
    return AddressRange{*base + in.imm, size};
  }
};

bool overlaps(const std::optional<AddressRange>& a, const std::optional<AddressRange>& b) {
  if (!a || !b) return true;
  return a->start < b->end() && b->start < a->end();
}

}  // namespace

Slice backward_slice(const FirmwareImage& image, const Cfg& cfg, const SliceCriterion& criterion) {
  if (!cfg.block_containing(criterion.instr_addr))
    throw Error(Errc::IncompleteCfg, "slice criterion " + hex32(criterion.instr_addr) + " is not in the cfg");
  Analysis an{image, cfg, {}, {}, {}, {}, {}};
  an.run();

  std::vector<std::pair<uint32_t, std::optional<AddressRange>>> stores;
  for (const auto& [addr, in] : an.instrs)
    if (in.opcode == Opcode::STORE || in.opcode == Opcode::STOREB) stores.emplace_back(addr, an.mem_range(in));

  Slice slice;
  std::deque<uint32_t> work;
  auto add = [&](uint32_t a) {
    if (a != kInitialDef && slice.instructions.insert(a).second) work.push_back(a);
  };
  auto add_reg_deps = [&](uint32_t at, uint8_t reg) {
    for (uint32_t d : an.at_instr.at(at)[reg]) add(d);
  };
  slice.instructions.insert(criterion.instr_addr);
  add_reg_deps(criterion.instr_addr, criterion.reg);
  while (!work.empty()) {
    const uint32_t a = work.front();
    work.pop_front();
    const Instruction& in = an.instrs.at(a);
    const RegUses u = data_uses(in);
    for (uint8_t r : u.regs) add_reg_deps(a, r);
    if (u.mem_load) {
      const auto range = an.mem_range(in);
      for (const auto& [sa, sr] : stores)
        if (overlaps(range, sr)) add(sa);
    }
  }
  for (uint32_t a : slice.instructions)
    if (const BasicBlock* b = cfg.block_containing(a))
      for (uint32_t f : cfg.functions_of(b->start)) slice.entry_functions.insert(f);
  return slice;
}

DefUseMap reaching_defs(const FirmwareImage& image, const Cfg& cfg, const std::vector<uint32_t>& path,
                        std::optional<SymState> start) {
  if (path.empty()) throw Error(Errc::InvalidPath, "empty path");
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    bool linked = false;
    for (const auto& e : cfg.out_edges(path[i])) linked |= e.dst == path[i + 1];
    if (!linked) throw Error(Errc::InvalidPath, "no edge " + hex32(path[i]) + " -> " + hex32(path[i + 1]));
  }
  SymEngine engine(image, true, start ? (1u << 24) : 1u);
  SymState s = start ? std::move(*start) : initial_state(path.front());
  if (s.pc != path.front()) throw Error(Errc::InvalidPath, "start state is not at " + hex32(path.front()));

  DefUseMap map;
  uint64_t step = 0;
  auto infeasible = [&](uint32_t at) {
    return Error(Errc::InvalidPath, "path infeasible at " + hex32(at));
  };
  for (size_t i = 0; i < path.size(); ++i) {
    const BasicBlock* b = cfg.block_at(path[i]);
    if (!b) throw Error(Errc::InvalidPath, "no block at " + hex32(path[i]));
    if (s.pc != b->start) throw infeasible(b->start);
    for (size_t k = 0; k < b->instructions.size(); ++k) {
      const Instruction& in = b->instructions[k];
      const bool last = k + 1 == b->instructions.size();
      for (uint8_t r : data_uses(in).regs) {
        UseRecord u;
        u.step = step;
        u.instr_addr = in.addr;
        u.kind = LocKind::Reg;
        u.location = r;
        u.tags = s.reg_tags[r];
        map.uses.push_back(u);
      }
      if (format_of(in.opcode) == Format::Load) {
        const Expr ea = mk_bin(ExprOp::Add, s.regs[in.rs1], mk_const(in.imm));
        if (is_const(ea)) {
          UseRecord u;
          u.step = step;
          u.instr_addr = in.addr;
          u.kind = LocKind::Mem;
          u.location = const_value(ea);
          u.size = in.opcode == Opcode::LOAD ? 4 : 1;
          try {
            engine.read(s, ea, u.size, &u.tags);
          } catch (...) {
            throw infeasible(in.addr);
          }
          map.uses.push_back(u);
        }
      }
      if (last && i + 1 == path.size() && is_terminator(in.opcode)) break;
      std::optional<uint32_t> forced;
      if (last && i + 1 < path.size()) forced = path[i + 1];
      auto out = engine.step(std::move(s), forced);
      ++step;
      if (out.tpm_use) {
        out.tpm_use->step = step - 1;
        out.tpm_use->path.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        map.tpm_stores.push_back(std::move(*out.tpm_use));
      }
      if (out.next.size() != 1) {
        if (out.next.empty() && last && i + 1 == path.size()) return map;
        throw infeasible(in.addr);
      }
      s = std::move(out.next.front());
    }
  }
  return map;
}

}  // namespace bootkeeper
