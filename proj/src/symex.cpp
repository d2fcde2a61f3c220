#include "bootkeeper/symex.hpp"

#include <algorithm>
#include <deque>

namespace bootkeeper {

Clock::time_point ExplorationConfig::effective_deadline(Clock::time_point start) const {
  if (deadline) return *deadline;
  return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_seconds));
}

std::vector<uint32_t> path_to_vector(const PathList& p) {
  std::vector<uint32_t> out;
  for (const PathNode* n = p.get(); n; n = n->prev.get()) out.push_back(n->block);
  std::reverse(out.begin(), out.end());
  return out;
}

SymState initial_state(uint32_t entry) {
  SymState s;
  for (auto& r : s.regs) r = mk_const(0);
  s.regs[kStackReg] = mk_const(kStackTop);
  s.pc = entry;
  s.path = std::make_shared<const PathNode>(PathNode{entry, nullptr});
  return s;
}

namespace {

struct MemFaultSignal {};

bool in_ram(uint32_t a) { return a >= kRamBase && a - kRamBase < kRamSize; }
bool in_stack(uint32_t a) { return a >= kStackBase && a < kStackTop; }
bool in_mmio(uint32_t a) { return a >= kTpmBase && a - kTpmBase < kTpmSize; }

MemKey key_of(const SplitAddr& sa, uint32_t i) {
  return {sa.base ? (sa.base->hash | 1) : 0, sa.offset + i};
}

Expr extract_byte(const MemCell& c) {
  Expr v = c.word;
  if (c.index) v = mk_bin(ExprOp::Shr, v, mk_const(8u * c.index));
  return mk_bin(ExprOp::And, v, mk_const(0xFF));
}

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

void push_block(SymState& s, uint32_t pc) {
  s.path = std::make_shared<const PathNode>(PathNode{pc, s.path});
}

}  // namespace

SymEngine::SymEngine(const FirmwareImage& image, bool track_tags, uint32_t first_var)
    : image_(image), track_(track_tags), next_var_(first_var) {}

uint32_t SymEngine::fresh_var() { return next_var_++; }

Expr SymEngine::read(SymState& s, const Expr& addr, unsigned size, std::array<ByteTags, 4>* tags) {
  const SplitAddr sa = split_address(addr);
  std::array<MemCell, 4> cells;
  std::optional<Expr> fresh;
  for (unsigned i = 0; i < size; ++i) {
    const MemKey k = key_of(sa, i);
    if (auto it = s.mem.find(k); it != s.mem.end()) {
      cells[i] = it->second;
      continue;
    }
    if (!sa.base) {
      const uint32_t a = sa.offset + i;
      if (auto b = image_.rom_byte(a)) {
        cells[i] = {mk_const(*b), 0, {}};
        continue;
      }
      if (in_mmio(a)) {
        // Device registers are not modelled: every read is a fresh value.
        return mk_var(fresh_var());
      }
      if (!in_ram(a) && !in_stack(a)) throw MemFaultSignal{};
    }
    if (!fresh) fresh = mk_var(fresh_var());
    MemCell c{*fresh, static_cast<uint8_t>(i), {}};
    s.mem[k] = c;
    cells[i] = c;
  }
  if (tags)
    for (unsigned i = 0; i < size; ++i) (*tags)[i] = cells[i].tags;
  if (size == 1) return extract_byte(cells[0]);
  bool same = true;
  for (unsigned i = 0; i < 4; ++i)
    if (cells[i].index != i || !expr_equal(cells[i].word, cells[0].word)) same = false;
  if (same) return cells[0].word;
  Expr v = extract_byte(cells[0]);
  for (unsigned i = 1; i < 4; ++i)
    v = mk_bin(ExprOp::Or, v, mk_bin(ExprOp::Shl, extract_byte(cells[i]), mk_const(8 * i)));
  return v;
}

void SymEngine::write(SymState& s, const Expr& addr, const Expr& value, unsigned size,
                      const std::array<ByteTags, 4>& tags) {
  const SplitAddr sa = split_address(addr);
  if (!sa.base) {
    for (unsigned i = 0; i < size; ++i) {
      const uint32_t a = sa.offset + i;
      if (in_mmio(a)) return;
      if (!in_ram(a) && !in_stack(a)) throw MemFaultSignal{};
    }
  }
  // Anything keyed under a different base may alias this store.
  const uint64_t mine = sa.base ? (sa.base->hash | 1) : 0;
  for (auto it = s.mem.begin(); it != s.mem.end();) {
    if (it->first.base_hash != mine && (sa.base || it->first.base_hash != 0)) it = s.mem.erase(it);
    else ++it;
  }
  for (unsigned i = 0; i < size; ++i) s.mem[key_of(sa, i)] = MemCell{value, static_cast<uint8_t>(i), tags[i]};
}

SymEngine::StepOutcome SymEngine::step(SymState s, std::optional<uint32_t> forced_next) {
  StepOutcome out;
  const uint32_t pc = s.pc;
  if (!image_.in_code(pc) || (pc - kLoadBase) % kInstrSize != 0) {
    out.end = StateEnd::Fault;
    return out;
  }
  Instruction in;
  try {
    in = image_.instruction_at(pc);
  } catch (const Error&) {
    out.end = StateEnd::Fault;
    return out;
  }
  ++steps_;
  ++s.depth;
  auto& r = s.regs;
  auto& rt = s.reg_tags;
  const DefSite here = DefSite::instr(pc);
  const ByteTags own{here, here, here};
  const std::array<ByteTags, 4> fresh_tags{own, own, own, own};
  uint32_t next = pc + kInstrSize;

  // Successor targets for a computed transfer; empty optional = unresolvable.
  auto resolve_target = [&](const Expr& target) -> std::optional<std::vector<uint32_t>> {
    if (is_const(target)) return std::vector<uint32_t>{const_value(target)};
    SolveResult sr = solve(s.constraints, target, 64, solver_limits);
    if (sr.status != SolveStatus::Values || sr.capped) return std::nullopt;
    return sr.values;
  };

  try {
    switch (format_of(in.opcode)) {
      case Format::RdImm:
        r[in.rd] = mk_const(in.imm);
        if (track_) rt[in.rd] = fresh_tags;
        break;
      case Format::RdRs:
        r[in.rd] = r[in.rs1];
        if (track_) {
          auto t = rt[in.rs1];
          for (auto& b : t) b.last = here;
          rt[in.rd] = t;
        }
        break;
      case Format::RdRsRs:
        r[in.rd] = mk_bin(alu_op(in.opcode), r[in.rs1], r[in.rs2]);
        if (track_) rt[in.rd] = fresh_tags;
        break;
      case Format::RdRsImm:
        r[in.rd] = mk_bin(alu_op(in.opcode), r[in.rs1], mk_const(in.imm));
        if (track_) rt[in.rd] = fresh_tags;
        break;
      case Format::Load: {
        const Expr ea = mk_bin(ExprOp::Add, r[in.rs1], mk_const(in.imm));
        const unsigned size = in.opcode == Opcode::LOAD ? 4 : 1;
        std::array<ByteTags, 4> mt{};
        Expr v = read(s, ea, size, &mt);
        r[in.rd] = v;
        if (track_) {
          for (unsigned i = 0; i < 4; ++i) rt[in.rd][i] = i < size ? ByteTags{here, mt[i].origin, mt[i].last} : own;
        }
        break;
      }
      case Format::Store: {
        const Expr ea = mk_bin(ExprOp::Add, r[in.rs1], mk_const(in.imm));
        const unsigned size = in.opcode == Opcode::STORE ? 4 : 1;
        Expr value = r[in.rs2];
        if (size == 1) value = mk_bin(ExprOp::And, value, mk_const(0xFF));
        bool is_tpm = false, must = false, unknown = false;
        if (is_const(ea)) {
          is_tpm = must = const_value(ea) == kTpmDataFifo;
        } else {
          SolveResult sr = solve(s.constraints, ea, 64, solver_limits);
          const bool has = std::find(sr.values.begin(), sr.values.end(), kTpmDataFifo) != sr.values.end();
          if (sr.status == SolveStatus::Values && !sr.capped) {
            is_tpm = has;
            must = has && sr.values.size() == 1;
          } else {
            auto cs = s.constraints;
            cs.push_back(mk_bin(ExprOp::Eq, ea, mk_const(kTpmDataFifo)));
            Sat sat = has ? Sat::Yes : check_sat(cs, solver_limits);
            is_tpm = sat != Sat::No;
            unknown = sat == Sat::Unknown;
          }
        }
        std::array<ByteTags, 4> vt{};
        for (unsigned i = 0; i < 4; ++i) vt[i] = track_ ? ByteTags{here, rt[in.rs2][i].origin, rt[in.rs2][i].via} : own;
        if (is_tpm) {
          TpmWriteEvent ev;
          ev.instr_addr = pc;
          ev.value = value;
          ev.path_constraints = s.constraints;
          ev.must = must;
          ev.solver_unknown = unknown;
          out.tpm_event = std::move(ev);
          if (track_) {
            TpmStoreUse use;
            use.step = s.depth;
            use.instr_addr = pc;
            use.value_reg = in.rs2;
            use.size = size;
            use.stream_offset = s.tpm_bytes;
            use.tags = rt[in.rs2];
            out.tpm_use = std::move(use);
          }
          s.tpm_bytes += size;
        }
        if (!must || !is_tpm) write(s, ea, value, size, vt);
        break;
      }
      case Format::Target:
      case Format::Reg: {
        const bool is_call = in.opcode == Opcode::CALL || in.opcode == Opcode::CALLR;
        std::vector<uint32_t> targets;
        if (format_of(in.opcode) == Format::Target) {
          targets = {in.imm};
        } else {
          auto t = resolve_target(r[in.rs1]);
          if (!t) {
            out.end = StateEnd::Unresolved;
            return out;
          }
          targets = *t;
        }
        if (is_call) {
          CallObservation obs;
          obs.call_addr = pc;
          obs.target = targets.size() == 1 ? targets[0] : 0;
          obs.regs = r;
          obs.constraints = s.constraints;
          out.call = std::move(obs);
          const Expr sp = mk_bin(ExprOp::Sub, r[kStackReg], mk_const(4));
          write(s, sp, mk_const(next), 4, fresh_tags);
          r[kStackReg] = sp;
          if (track_) rt[kStackReg] = fresh_tags;
        }
        for (uint32_t t : targets) {
          if (forced_next && *forced_next != t) continue;
          SymState c = s;
          if (format_of(in.opcode) == Format::Reg && !is_const(r[in.rs1]))
            c.constraints.push_back(mk_bin(ExprOp::Eq, r[in.rs1], mk_const(t)));
          c.pc = t;
          push_block(c, t);
          out.next.push_back(std::move(c));
        }
        return out;
      }
      case Format::Branch: {
        const Expr cond = mk_bin(branch_op(in.opcode), r[in.rs1], r[in.rs2]);
        const uint32_t taken = in.imm, fall = next;
        auto go = [&](SymState c, uint32_t to, const Expr& constraint) {
          if (!is_const(constraint)) c.constraints.push_back(constraint);
          c.pc = to;
          push_block(c, to);
          out.next.push_back(std::move(c));
        };
        if (is_const(cond)) {
          const uint32_t to = const_value(cond) ? taken : fall;
          if (forced_next && *forced_next != to) return out;
          go(std::move(s), to, cond);
          return out;
        }
        const Expr ncond = mk_not(cond);
        auto feasible = [&](const Expr& c) {
          auto cs = s.constraints;
          cs.push_back(c);
          return check_sat(cs, solver_limits) != Sat::No;
        };
        if (forced_next) {
          const Expr& c = *forced_next == taken ? cond : ncond;
          if ((*forced_next == taken || *forced_next == fall) && feasible(c)) go(std::move(s), *forced_next, c);
          return out;
        }
        bool t_ok = feasible(cond), f_ok = feasible(ncond);
        if (t_ok && f_ok) {
          uint32_t& count = s.fork_counts[pc];
          if (count >= loop_bound) {
            // Stop unrolling: drop the successor that continues backwards.
            if (taken <= pc) t_ok = false;
            else if (fall <= pc) f_ok = false;
          }
          ++count;
        }
        if (t_ok && f_ok) {
          go(s, taken, cond);
          go(std::move(s), fall, ncond);
        } else if (t_ok) {
          go(std::move(s), taken, cond);
        } else if (f_ok) {
          go(std::move(s), fall, ncond);
        }
        return out;
      }
      case Format::None: {
        if (in.opcode == Opcode::HALT) {
          out.end = StateEnd::Halt;
          return out;
        }
        const Expr sp = r[kStackReg];
        if (is_const(sp) && const_value(sp) >= kStackTop) {
          out.end = StateEnd::Fault;
          return out;
        }
        const Expr ret = read(s, sp, 4);
        r[kStackReg] = mk_bin(ExprOp::Add, sp, mk_const(4));
        if (track_) rt[kStackReg] = fresh_tags;
        auto targets = resolve_target(ret);
        if (!targets) {
          out.end = StateEnd::Unresolved;
          return out;
        }
        for (uint32_t t : *targets) {
          if (forced_next && *forced_next != t) continue;
          SymState c = s;
          if (!is_const(ret)) c.constraints.push_back(mk_bin(ExprOp::Eq, ret, mk_const(t)));
          c.pc = t;
          push_block(c, t);
          out.next.push_back(std::move(c));
        }
        if (targets->size() == 1) out.returned_to = (*targets)[0];
        return out;
      }
    }
  } catch (const MemFaultSignal&) {
    out.end = StateEnd::Fault;
    return out;
  }
  s.pc = next;
  out.next.push_back(std::move(s));
  return out;
}

namespace {

uint64_t fingerprint(const SymState& s) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](uint64_t v) { h = (h ^ v) * 1099511628211ull; };
  for (const auto& r : s.regs) mix(r->hash);
  for (const auto& [k, c] : s.mem) {
    mix(k.base_hash);
    mix(k.offset);
    mix(c.word->hash);
    mix(c.index);
  }
  mix(s.constraints.size());
  return h;
}

}  // namespace

ExploreResult explore_from(const FirmwareImage& image, std::vector<SymState> roots,
                           const ExplorationConfig& config, const ExploreOptions& options,
                           uint32_t first_var) {
  ExploreResult res;
  SymEngine engine(image, options.track_tags, first_var);
  engine.loop_bound = config.loop_bound;
  const auto deadline = config.effective_deadline(Clock::now());

  std::vector<bool> visited(image.code.size() / kInstrSize, false);
  std::map<uint32_t, std::set<uint64_t>> snapshot_prints;
  std::map<uint32_t, std::vector<std::array<uint64_t, kNumRegs>>> call_prints;
  std::map<uint32_t, size_t> event_index;

  std::deque<SymState> active;
  for (auto& r : roots) active.push_back(std::move(r));
  res.states_created = active.size();
  uint64_t paths = 0;

  auto truncate = [&] { res.exhausted = false; };

  while (!active.empty()) {
    if (Clock::now() >= deadline) {
      res.timed_out = true;
      truncate();
      break;
    }
    SymState st = std::move(active.front());
    active.pop_front();
    // Run this state until it forks or ends (bounded quantum).
    bool live = true;
    for (int quantum = 0; quantum < 4096; ++quantum) {
      live = false;
      if (st.depth >= config.max_depth) {
        truncate();
        break;
      }
      const uint32_t pc = st.pc;
      if (image.in_code(pc) && (pc - kLoadBase) % kInstrSize == 0) visited[(pc - kLoadBase) / kInstrSize] = true;
      const PathList before = st.path;
      auto outcome = engine.step(std::move(st));
      if (outcome.tpm_event) {
        outcome.tpm_event->path = path_to_vector(before);
        auto it = event_index.find(pc);
        if (it == event_index.end()) {
          event_index[pc] = res.events.size();
          res.events.push_back(std::move(*outcome.tpm_event));
        } else if (outcome.tpm_event->must && !res.events[it->second].must) {
          res.events[it->second] = std::move(*outcome.tpm_event);
        }
      }
      if (outcome.tpm_use) {
        outcome.tpm_use->path = path_to_vector(before);
        res.tpm_uses.push_back(std::move(*outcome.tpm_use));
      }
      if (outcome.call) {
        std::array<uint64_t, kNumRegs> pr;
        for (size_t i = 0; i < kNumRegs; ++i) pr[i] = outcome.call->regs[i]->hash;
        auto& seen = call_prints[pc];
        if (std::find(seen.begin(), seen.end(), pr) == seen.end() && seen.size() < config.max_snapshots_per_site) {
          seen.push_back(pr);
          res.calls.push_back(std::move(*outcome.call));
        }
      }
      if (outcome.returned_to && options.capture_returns && outcome.next.size() == 1) {
        auto& prints = snapshot_prints[*outcome.returned_to];
        const SymState& ns = outcome.next.front();
        const uint64_t fp = fingerprint(ns);
        if (!prints.count(fp)) {
          if (prints.size() < config.max_snapshots_per_site) {
            prints.insert(fp);
            res.return_snapshots[*outcome.returned_to].push_back(ns);
          } else {
            res.snapshot_overflow.insert(*outcome.returned_to);
          }
        }
      }
      if (outcome.next.empty()) {
        if (outcome.end == StateEnd::Unresolved) truncate();
        ++paths;
        if (options.record_paths) res.completed_paths.push_back(path_to_vector(before));
        if (options.max_paths && paths > options.max_paths) {
          truncate();
          active.clear();
        }
        break;
      }
      if (outcome.next.size() == 1) {
        st = std::move(outcome.next.front());
        live = true;
        continue;
      }
      res.states_created += outcome.next.size() - 1;
      for (auto& n : outcome.next) active.push_back(std::move(n));
      break;
    }
    if (live) active.push_back(std::move(st));
    if (res.states_created > config.max_states) {
      truncate();
      break;
    }
  }
  if (!active.empty()) truncate();
  res.steps = engine.steps();
  for (size_t i = 0; i < visited.size(); ++i)
    if (visited[i]) res.visited.insert(kLoadBase + static_cast<uint32_t>(i) * kInstrSize);
  return res;
}

ExploreResult explore(const FirmwareImage& image, uint32_t entry, const ExplorationConfig& config) {
  return explore_from(image, {initial_state(entry)}, config, ExploreOptions{});
}

std::vector<TpmWriteEvent> dedup_events(const std::vector<TpmWriteEvent>& events) {
  std::map<uint32_t, TpmWriteEvent> by_addr;
  for (const auto& e : events) {
    auto it = by_addr.find(e.instr_addr);
    if (it == by_addr.end()) by_addr.emplace(e.instr_addr, e);
    else if (e.must && !it->second.must) it->second = e;
  }
  std::vector<TpmWriteEvent> out;
  for (auto& [_, e] : by_addr) out.push_back(std::move(e));
  return out;
}

FindResult find_tpm_writes(const FirmwareImage& image, const ExplorationConfig& config) {
  FindResult fr;
  fr.exploration = explore(image, image.entry, config);
  fr.events = dedup_events(fr.exploration.events);
  if (!fr.events.empty()) fr.status = FindStatus::Found;
  else fr.status = fr.exploration.exhausted ? FindStatus::None : FindStatus::AnalysisTimeout;
  return fr;
}

}  // namespace bootkeeper
