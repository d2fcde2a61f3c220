#include "bootkeeper/cfg.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include "bootkeeper/error.hpp"

namespace bootkeeper {

const char* terminator_name(Terminator t) {
  switch (t) {
    case Terminator::Fallthrough: return "fallthrough";
    case Terminator::Jump: return "jump";
    case Terminator::Branch: return "branch";
    case Terminator::Call: return "call";
    case Terminator::Indirect: return "indirect";
    case Terminator::Ret: return "ret";
    case Terminator::Halt: return "halt";
  }
  return "?";
}

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Fallthrough: return "fallthrough";
    case EdgeKind::Jump: return "jump";
    case EdgeKind::Branch: return "branch";
    case EdgeKind::Call: return "call";
    case EdgeKind::ReturnSite: return "return-site";
    case EdgeKind::IndirectResolved: return "indirect";
    case EdgeKind::Ret: return "ret";
  }
  return "?";
}

bool BasicBlock::is_call() const {
  return !instructions.empty() && (last().opcode == Opcode::CALL || last().opcode == Opcode::CALLR);
}

const BasicBlock* Cfg::block_at(uint32_t start) const {
  auto it = nodes.find(start);
  return it == nodes.end() ? nullptr : &it->second;
}

const BasicBlock* Cfg::block_containing(uint32_t addr) const {
  auto it = nodes.upper_bound(addr);
  if (it == nodes.begin()) return nullptr;
  --it;
  return addr < it->second.end() ? &it->second : nullptr;
}

std::vector<CfgEdge> Cfg::out_edges(uint32_t block) const {
  std::vector<CfgEdge> out;
  for (auto it = edges.lower_bound({block, 0, EdgeKind::Fallthrough}); it != edges.end() && it->src == block; ++it)
    out.push_back(*it);
  return out;
}

std::vector<CfgEdge> Cfg::in_edges(uint32_t block) const {
  std::vector<CfgEdge> out;
  for (const auto& e : edges)
    if (e.dst == block) out.push_back(e);
  return out;
}

std::vector<uint32_t> Cfg::functions_of(uint32_t block) const {
  std::vector<uint32_t> out;
  for (const auto& [entry, f] : functions)
    if (f.blocks.count(block)) out.push_back(entry);
  return out;
}

namespace {

bool decodable(const FirmwareImage& image, uint32_t a) {
  if (!image.in_code(a) || (a - kLoadBase) % kInstrSize != 0) return false;
  try {
    image.instruction_at(a);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Terminator terminator_of(Opcode op) {
  switch (op) {
    case Opcode::JMP: return Terminator::Jump;
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLTU:
    case Opcode::BGEU: return Terminator::Branch;
    case Opcode::CALL: return Terminator::Call;
    case Opcode::JMPR:
    case Opcode::CALLR: return Terminator::Indirect;
    case Opcode::RET: return Terminator::Ret;
    case Opcode::HALT: return Terminator::Halt;
    default: return Terminator::Fallthrough;
  }
}

bool intra_edge(const CfgEdge& e) {
  return e.kind == EdgeKind::Fallthrough || e.kind == EdgeKind::Jump || e.kind == EdgeKind::Branch ||
         e.kind == EdgeKind::ReturnSite;
}

struct Builder {
  const FirmwareImage& image;
  const CfgOptions& opt;
  std::set<uint32_t> leaders;
  std::set<uint32_t> insts;
  std::set<uint32_t> scanned;
  std::set<uint32_t> bad;
  std::map<uint32_t, std::set<uint32_t>> indirect;  // indirect instr -> targets
  std::set<uint32_t> unresolved_instrs;

  void check_deadline() const {
    if (opt.deadline && Clock::now() >= *opt.deadline) throw Error(Errc::AnalysisTimeout, "cfg recovery timed out");
  }

  void add_leader(uint32_t a) {
    if (!decodable(image, a)) {
      bad.insert(a);
      return;
    }
    leaders.insert(a);
  }

  void scan() {
    std::deque<uint32_t> work(leaders.begin(), leaders.end());
    while (!work.empty()) {
      uint32_t a = work.front();
      work.pop_front();
      if (!scanned.insert(a).second) continue;
      for (;;) {
        if (!decodable(image, a)) {
          bad.insert(a);
          break;
        }
        if (!insts.insert(a).second) break;  // already disassembled from another leader
        const Instruction in = image.instruction_at(a);
        auto leader = [&](uint32_t t) {
          const size_t before = leaders.size();
          add_leader(t);
          if (leaders.size() != before) work.push_back(t);
        };
        bool stop = true;
        switch (terminator_of(in.opcode)) {
          case Terminator::Fallthrough: stop = false; break;
          case Terminator::Jump: leader(in.imm); break;
          case Terminator::Branch:
            leader(in.imm);
            leader(a + kInstrSize);
            break;
          case Terminator::Call:
            leader(in.imm);
            leader(a + kInstrSize);
            break;
          case Terminator::Indirect:
            if (auto it = indirect.find(a); it != indirect.end())
              for (uint32_t t : it->second) leader(t);
            if (in.opcode == Opcode::CALLR) leader(a + kInstrSize);
            break;
          case Terminator::Ret:
          case Terminator::Halt: break;
        }
        if (stop) break;
        a += kInstrSize;
      }
    }
  }

  Cfg build() const {
    Cfg cfg;
    cfg.entry = image.entry;
    for (uint32_t l : leaders) {
      if (!insts.count(l)) continue;
      BasicBlock b;
      b.start = l;
      uint32_t a = l;
      for (;;) {
        Instruction in = image.instruction_at(a);
        b.instructions.push_back(in);
        a += kInstrSize;
        const Terminator t = terminator_of(in.opcode);
        if (t != Terminator::Fallthrough) {
          b.terminator = t;
          break;
        }
        if (!insts.count(a)) {
          b.terminator = bad.count(a) ? Terminator::Halt : Terminator::Fallthrough;
          b.decode_error = bad.count(a) > 0;
          break;
        }
        if (leaders.count(a)) break;
      }
      b.length = a - l;
      cfg.nodes.emplace(l, std::move(b));
    }
    auto edge = [&](uint32_t s, uint32_t d, EdgeKind k) {
      if (cfg.nodes.count(d)) cfg.edges.insert({s, d, k});
    };
    for (const auto& [start, b] : cfg.nodes) {
      const Instruction& in = b.last();
      switch (b.terminator) {
        case Terminator::Fallthrough:
          if (!b.decode_error) edge(start, b.end(), EdgeKind::Fallthrough);
          break;
        case Terminator::Jump: edge(start, in.imm, EdgeKind::Jump); break;
        case Terminator::Branch:
          edge(start, in.imm, EdgeKind::Branch);
          edge(start, b.end(), EdgeKind::Fallthrough);
          break;
        case Terminator::Call:
          edge(start, in.imm, EdgeKind::Call);
          edge(start, b.end(), EdgeKind::ReturnSite);
          break;
        case Terminator::Indirect:
          if (auto it = indirect.find(in.addr); it != indirect.end())
            for (uint32_t t : it->second) edge(start, t, EdgeKind::IndirectResolved);
          if (in.opcode == Opcode::CALLR) edge(start, b.end(), EdgeKind::ReturnSite);
          if (unresolved_instrs.count(in.addr)) cfg.unresolved.insert(start);
          break;
        case Terminator::Ret:
        case Terminator::Halt: break;
      }
    }
    cfg.decode_errors = bad;
    link_functions(cfg);
    return cfg;
  }

  static void link_functions(Cfg& cfg) {
    std::map<uint32_t, std::set<uint32_t>> callers;  // function entry -> call blocks
    std::set<uint32_t> entries{cfg.entry};
    for (const auto& e : cfg.edges) {
      const BasicBlock& src = cfg.nodes.at(e.src);
      if (e.kind == EdgeKind::Call || (e.kind == EdgeKind::IndirectResolved && src.last().opcode == Opcode::CALLR)) {
        entries.insert(e.dst);
        callers[e.dst].insert(e.src);
      }
    }
    for (uint32_t entry : entries) {
      if (!cfg.nodes.count(entry)) continue;
      Function f;
      f.entry = entry;
      f.call_sites = callers[entry];
      std::deque<uint32_t> work{entry};
      while (!work.empty()) {
        uint32_t b = work.front();
        work.pop_front();
        if (!f.blocks.insert(b).second) continue;
        const BasicBlock& bb = cfg.nodes.at(b);
        for (const auto& e : cfg.out_edges(b)) {
          const bool jmpr = e.kind == EdgeKind::IndirectResolved && bb.last().opcode == Opcode::JMPR;
          if (intra_edge(e) || jmpr) work.push_back(e.dst);
          if (e.kind == EdgeKind::Call || (e.kind == EdgeKind::IndirectResolved && !jmpr)) f.callees.insert(e.dst);
        }
      }
      cfg.functions.emplace(entry, std::move(f));
    }
    for (const auto& [entry, f] : cfg.functions)
      for (uint32_t b : f.blocks)
        if (cfg.nodes.at(b).terminator == Terminator::Ret)
          for (uint32_t site : f.call_sites) {
            const uint32_t ret_to = cfg.nodes.at(site).end();
            if (cfg.nodes.count(ret_to)) cfg.edges.insert({b, ret_to, EdgeKind::Ret});
          }
  }
};

// Backward intra-procedural paths ending at `block`, forward order.
std::vector<std::vector<uint32_t>> backward_paths(const Cfg& cfg, uint32_t block, unsigned depth,
                                                  size_t max_paths, bool& overflow) {
  std::map<uint32_t, std::vector<uint32_t>> preds;
  for (const auto& e : cfg.edges)
    if (e.kind == EdgeKind::Fallthrough || e.kind == EdgeKind::Jump || e.kind == EdgeKind::Branch ||
        (e.kind == EdgeKind::IndirectResolved && cfg.nodes.at(e.src).last().opcode == Opcode::JMPR))
      preds[e.dst].push_back(e.src);
  std::set<uint32_t> entries;
  for (const auto& [entry, f] : cfg.functions) entries.insert(entry);
  entries.insert(cfg.entry);

  std::vector<std::vector<uint32_t>> out;
  std::vector<uint32_t> cur{block};
  overflow = false;
  auto rec = [&](auto&& self) -> void {
    if (out.size() > max_paths) {
      overflow = true;
      return;
    }
    const uint32_t head = cur.back();
    const auto& ps = preds[head];
    if (cur.size() >= depth || entries.count(head) || ps.empty()) {
      out.emplace_back(cur.rbegin(), cur.rend());
      return;
    }
    for (uint32_t p : ps) {
      cur.push_back(p);
      self(self);
      cur.pop_back();
    }
  };
  rec(rec);
  return out;
}

}  // namespace

std::set<uint32_t> resolve_indirect(const FirmwareImage& image, Cfg& cfg, const BasicBlock& block,
                                    const CfgOptions& options) {
  std::set<uint32_t> targets;
  bool overflow = false;
  auto paths = backward_paths(cfg, block.start, options.path_depth, options.max_paths, overflow);
  auto fail = [&] {
    cfg.unresolved.insert(block.start);
    return std::set<uint32_t>{};
  };
  if (overflow) return fail();

  for (const auto& path : paths) {
    SymEngine engine(image, false, 1);
    SymState s;
    for (auto& r : s.regs) r = mk_var(engine.fresh_var());
    s.pc = path.front();
    bool feasible = true;
    for (size_t i = 0; i < path.size() && feasible; ++i) {
      const BasicBlock& b = cfg.nodes.at(path[i]);
      if (s.pc != b.start) {
        feasible = false;
        break;
      }
      const bool last_block = i + 1 == path.size();
      for (size_t k = 0; k < b.instructions.size(); ++k) {
        const bool last_instr = k + 1 == b.instructions.size();
        if (last_block && last_instr) break;
        std::optional<uint32_t> forced;
        if (last_instr) forced = path[i + 1];
        auto out = engine.step(std::move(s), forced);
        if (out.next.size() != 1) {
          feasible = false;
          break;
        }
        s = std::move(out.next.front());
      }
    }
    if (!feasible) continue;
    const Instruction& in = block.last();
    const Expr target = s.regs[in.rs1];
    if (is_const(target)) {
      targets.insert(const_value(target));
      continue;
    }
    SolveResult sr = solve(s.constraints, target, options.indirect_cap, engine.solver_limits);
    if (sr.status == SolveStatus::Unsat) continue;
    if (sr.status != SolveStatus::Values || sr.capped) return fail();
    targets.insert(sr.values.begin(), sr.values.end());
  }
  std::set<uint32_t> valid;
  for (uint32_t t : targets)
    if (decodable(image, t)) valid.insert(t);
  if (valid.size() != targets.size()) return fail();
  return valid;
}

Cfg recover_cfg(const FirmwareImage& image, const CfgOptions& options) {
  Builder b{image, options, {}, {}, {}, {}, {}, {}};
  for (;;) {
    b.check_deadline();
    b.leaders.clear();
    b.insts.clear();
    b.scanned.clear();
    b.bad.clear();
    b.add_leader(image.entry);
    b.scan();
    Cfg cfg = b.build();
    bool changed = false;
    for (const auto& [start, blk] : cfg.nodes) {
      if (blk.terminator != Terminator::Indirect) continue;
      const uint32_t ia = blk.last().addr;
      b.check_deadline();
      Cfg scratch = cfg;
      std::set<uint32_t> t = resolve_indirect(image, scratch, blk, options);
      auto& known = b.indirect[ia];
      if (scratch.unresolved.count(start)) {
        if (b.unresolved_instrs.insert(ia).second) changed = true;
        continue;
      }
      if (b.unresolved_instrs.erase(ia)) changed = true;
      for (uint32_t x : t)
        if (known.insert(x).second) changed = true;
    }
    if (!changed) return cfg;
  }
}

std::vector<AddressRange> reachable_blocks(const Cfg& cfg) {
  std::vector<AddressRange> out;
  for (const auto& [start, b] : cfg.nodes) out.push_back({start, b.length});
  return out;
}

std::string to_dot(const Cfg& cfg) {
  std::ostringstream os;
  os << "digraph cfg {\n  node [shape=box];\n";
  for (const auto& [start, b] : cfg.nodes) {
    os << "  \"" << hex32(start) << "\" [label=\"" << hex32(start) << "\"";
    if (cfg.unresolved.count(start)) os << ", color=red";
    os << "];\n";
  }
  for (const auto& e : cfg.edges)
    os << "  \"" << hex32(e.src) << "\" -> \"" << hex32(e.dst) << "\" [label=\"" << edge_kind_name(e.kind) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace bootkeeper
