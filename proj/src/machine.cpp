#include "bootkeeper/machine.hpp"

#include <algorithm>
#include <bit>

namespace bootkeeper {

PcrBank tpm_extend(const PcrBank& pcrs, unsigned index, const Digest& m) {
  if (index >= kNumPcrs) throw Error(Errc::IndexOutOfRange, "PCR index " + std::to_string(index));
  PcrBank out = pcrs;
  std::array<uint8_t, 40> buf;
  std::copy(pcrs[index].begin(), pcrs[index].end(), buf.begin());
  std::copy(m.begin(), m.end(), buf.begin() + 20);
  out[index] = sha1(buf);
  return out;
}

Digest extend_chain(std::span<const Digest> measurements) {
  PcrBank bank{};
  for (const auto& m : measurements) bank = tpm_extend(bank, 0, m);
  return bank[0];
}

void TpmDevice::mmio_write(uint64_t step, uint32_t addr, uint32_t value, unsigned size, uint32_t instr_addr) {
  log_.push_back({step, addr, value, instr_addr, size});
  if (addr != kTpmDataFifo) return;
  for (unsigned i = 0; i < size; ++i) {
    fifo_.push_back(static_cast<uint8_t>(value >> (8 * i)));
    if (fifo_.size() == 20) {
      Digest m;
      std::copy(fifo_.begin(), fifo_.end(), m.begin());
      pcrs_ = tpm_extend(pcrs_, 0, m);
      measurements_.push_back(m);
      fifo_.clear();
    }
  }
}

Taint taint_union(const Taint& a, const Taint& b) {
  if (!a || a->empty()) return b;
  if (!b || b->empty() || a == b) return a;
  auto out = std::make_shared<std::vector<uint32_t>>();
  out->reserve(a->size() + b->size());
  std::set_union(a->begin(), a->end(), b->begin(), b->end(), std::back_inserter(*out));
  if (out->size() == a->size()) return a;
  if (out->size() == b->size()) return b;
  return out;
}

Taint taint_with(const Taint& a, uint32_t instr_addr) {
  if (taint_contains(a, instr_addr)) return a;
  auto out = std::make_shared<std::vector<uint32_t>>(a ? *a : std::vector<uint32_t>{});
  out->insert(std::lower_bound(out->begin(), out->end(), instr_addr), instr_addr);
  return out;
}

bool taint_contains(const Taint& t, uint32_t instr_addr) {
  return t && std::binary_search(t->begin(), t->end(), instr_addr);
}

namespace {

bool in_ram(uint32_t a) { return a >= kRamBase && a - kRamBase < kRamSize; }
bool in_stack(uint32_t a) { return a >= kStackBase && a < kStackTop; }
bool in_mmio(uint32_t a) { return a >= kTpmBase && a - kTpmBase < kTpmSize; }

}  // namespace

Machine::Machine(const FirmwareImage& image) : image_(image) {
  check_image(image_);
  state_.pc = image_.entry;
  state_.regs[kStackReg] = kStackTop;
}

uint8_t Machine::load8(uint32_t addr) const {
  if (auto b = image_.rom_byte(addr)) return *b;
  if (in_ram(addr) || in_stack(addr)) {
    auto it = state_.mem.find(addr);
    return it == state_.mem.end() ? 0 : it->second;
  }
  if (in_mmio(addr)) return 0;
  throw Error(Errc::MemFault, "read " + hex32(addr));
}

uint32_t Machine::load32(uint32_t addr) const {
  uint32_t v = 0;
  for (unsigned i = 0; i < 4; ++i) v |= uint32_t{load8(addr + i)} << (8 * i);
  return v;
}

Taint Machine::mem_taint(uint32_t addr, unsigned size) const {
  Taint t;
  for (unsigned i = 0; i < size; ++i)
    if (auto it = trace_.mem_taint.find(addr + i); it != trace_.mem_taint.end()) t = taint_union(t, it->second);
  return t;
}

void Machine::store8(uint32_t addr, uint8_t v, const Taint& t) {
  if (!(in_ram(addr) || in_stack(addr))) throw Error(Errc::MemFault, "write " + hex32(addr));
  state_.mem[addr] = v;
  trace_.mem_taint[addr] = t;
}

void Machine::store(uint32_t addr, uint32_t v, unsigned size, const Taint& t, TraceEntry& te) {
  te.written_addr = addr;
  te.written_value = size == 4 ? v : (v & 0xFF);
  te.written_taint = t;
  if (in_mmio(addr)) {
    if (!in_mmio(addr + size - 1)) throw Error(Errc::MemFault, "write " + hex32(addr));
    tpm_.mmio_write(state_.step_count, addr, *te.written_value, size, te.pc);
    return;
  }
  for (unsigned i = 0; i < size; ++i)
    if (!(in_ram(addr + i) || in_stack(addr + i))) throw Error(Errc::MemFault, "write " + hex32(addr + i));
  for (unsigned i = 0; i < size; ++i) store8(addr + i, static_cast<uint8_t>(v >> (8 * i)), t);
}

void Machine::step() {
  if (state_.halted) return;
  const uint32_t pc = state_.pc;
  if (!image_.in_code(pc) || (pc - kLoadBase) % kInstrSize != 0) throw Error(Errc::UnalignedPc, hex32(pc));
  const Instruction in = image_.instruction_at(pc);
  auto& r = state_.regs;
  auto& rt = trace_.reg_taint;

  TraceEntry te;
  te.step = state_.step_count;
  te.pc = pc;
  te.instruction = in;
  uint32_t next = pc + kInstrSize;

  auto alu = [&](uint32_t a, uint32_t b) -> uint32_t {
    switch (in.opcode) {
      case Opcode::ADD: case Opcode::ADDI: return a + b;
      case Opcode::SUB: case Opcode::SUBI: return a - b;
      case Opcode::AND: case Opcode::ANDI: return a & b;
      case Opcode::OR: case Opcode::ORI: return a | b;
      case Opcode::XOR: case Opcode::XORI: return a ^ b;
      case Opcode::SHL: case Opcode::SHLI: return a << (b & 31);
      case Opcode::SHR: case Opcode::SHRI: return a >> (b & 31);
      case Opcode::ROL: case Opcode::ROLI: return std::rotl(a, static_cast<int>(b & 31));
      default: return 0;
    }
  };

  switch (format_of(in.opcode)) {
    case Format::RdImm:
      r[in.rd] = in.imm;
      rt[in.rd] = taint_with(nullptr, pc);
      break;
    case Format::RdRs:
      r[in.rd] = r[in.rs1];
      rt[in.rd] = taint_with(rt[in.rs1], pc);
      break;
    case Format::RdRsRs:
      rt[in.rd] = taint_with(taint_union(rt[in.rs1], rt[in.rs2]), pc);
      r[in.rd] = alu(r[in.rs1], r[in.rs2]);
      break;
    case Format::RdRsImm:
      rt[in.rd] = taint_with(rt[in.rs1], pc);
      r[in.rd] = alu(r[in.rs1], in.imm);
      break;
    case Format::Load: {
      const uint32_t ea = r[in.rs1] + in.imm;
      const unsigned size = in.opcode == Opcode::LOAD ? 4 : 1;
      const uint32_t v = size == 4 ? load32(ea) : load8(ea);
      rt[in.rd] = taint_with(taint_union(rt[in.rs1], mem_taint(ea, size)), pc);
      r[in.rd] = v;
      break;
    }
    case Format::Store: {
      const uint32_t ea = r[in.rs1] + in.imm;
      const unsigned size = in.opcode == Opcode::STORE ? 4 : 1;
      store(ea, r[in.rs2], size, taint_with(taint_union(rt[in.rs2], rt[in.rs1]), pc), te);
      break;
    }
    case Format::Target:
      if (in.opcode == Opcode::CALL) {
        const uint32_t sp = r[kStackReg] - 4;
        rt[kStackReg] = taint_with(rt[kStackReg], pc);
        store(sp, next, 4, taint_with(nullptr, pc), te);
        r[kStackReg] = sp;
      }
      next = in.imm;
      break;
    case Format::Reg:
      if (in.opcode == Opcode::CALLR) {
        const uint32_t sp = r[kStackReg] - 4;
        rt[kStackReg] = taint_with(rt[kStackReg], pc);
        store(sp, next, 4, taint_with(nullptr, pc), te);
        r[kStackReg] = sp;
      }
      next = r[in.rs1];
      break;
    case Format::Branch: {
      const uint32_t a = r[in.rs1], b = r[in.rs2];
      bool taken = false;
      switch (in.opcode) {
        case Opcode::BEQ: taken = a == b; break;
        case Opcode::BNE: taken = a != b; break;
        case Opcode::BLTU: taken = a < b; break;
        case Opcode::BGEU: taken = a >= b; break;
        default: break;
      }
      if (taken) next = in.imm;
      break;
    }
    case Format::None:
      if (in.opcode == Opcode::HALT) {
        state_.halted = true;
        next = pc;
      } else {  // RET
        const uint32_t sp = r[kStackReg];
        if (sp >= kStackTop) throw Error(Errc::StackUnderflow, "RET at " + hex32(pc));
        next = load32(sp);
        r[kStackReg] = sp + 4;
        rt[kStackReg] = taint_with(rt[kStackReg], pc);
      }
      break;
  }
  state_.pc = next;
  ++state_.step_count;
  trace_.entries.push_back(std::move(te));
}

RunResult run(const FirmwareImage& image, uint64_t max_steps) {
  Machine m(image);
  while (!m.state().halted) {
    if (m.state().step_count >= max_steps)
      throw Error(Errc::StepBudgetExceeded, "no HALT within " + std::to_string(max_steps) + " steps");
    m.step();
  }
  return {m.state(), m.tpm(), m.trace()};
}

}  // namespace bootkeeper
