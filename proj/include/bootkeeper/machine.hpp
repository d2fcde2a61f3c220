#pragma once

// Concrete interpreter with a memory-mapped TPM. Used as the runtime ground
// truth for every static analysis.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bootkeeper/isa.hpp"
#include "bootkeeper/sha1.hpp"

namespace bootkeeper {

inline constexpr size_t kNumPcrs = 16;
using PcrBank = std::array<Digest, kNumPcrs>;

// Returns `pcrs` with pcrs[index] = SHA1(pcrs[index] || m).
PcrBank tpm_extend(const PcrBank& pcrs, unsigned index, const Digest& m);

// Expected PCR0 after extending a zeroed bank with each measurement in order.
Digest extend_chain(std::span<const Digest> measurements);

struct MmioWrite {
  uint64_t step = 0;
  uint32_t addr = 0;
  uint32_t value = 0;
  uint32_t instr_addr = 0;  // pc of the storing instruction
  unsigned size = 4;
};

class TpmDevice {
 public:
  const PcrBank& pcrs() const { return pcrs_; }
  const std::vector<uint8_t>& fifo() const { return fifo_; }
  const std::vector<MmioWrite>& access_log() const { return log_; }
  // Measurements delivered so far, in extend order.
  const std::vector<Digest>& measurements() const { return measurements_; }

  void mmio_write(uint64_t step, uint32_t addr, uint32_t value, unsigned size, uint32_t instr_addr = 0);

 private:
  PcrBank pcrs_{};
  std::vector<uint8_t> fifo_;
  std::vector<MmioWrite> log_;
  std::vector<Digest> measurements_;
};

// Dynamic taint: sorted set of instruction addresses that contributed a value.
using Taint = std::shared_ptr<const std::vector<uint32_t>>;
Taint taint_union(const Taint& a, const Taint& b);
Taint taint_with(const Taint& a, uint32_t instr_addr);
bool taint_contains(const Taint& t, uint32_t instr_addr);

struct MachineState {
  std::array<uint32_t, kNumRegs> regs{};
  uint32_t pc = 0;
  std::unordered_map<uint32_t, uint8_t> mem;  // RAM and stack bytes written so far
  bool halted = false;
  uint64_t step_count = 0;
};

struct TraceEntry {
  uint64_t step = 0;
  uint32_t pc = 0;
  Instruction instruction;
  std::optional<uint32_t> written_addr;
  std::optional<uint32_t> written_value;
  Taint written_taint;  // taint of the stored value (stores only)
};

struct ExecutionTrace {
  std::vector<TraceEntry> entries;
  std::array<Taint, kNumRegs> reg_taint{};
  std::unordered_map<uint32_t, Taint> mem_taint;
};

class Machine {
 public:
  explicit Machine(const FirmwareImage& image);

  // Executes one instruction. Throws Error(MemFault | UnalignedPc | StackUnderflow).
  void step();

  const MachineState& state() const { return state_; }
  const TpmDevice& tpm() const { return tpm_; }
  const ExecutionTrace& trace() const { return trace_; }
  const FirmwareImage& image() const { return image_; }

  uint32_t load32(uint32_t addr) const;
  uint8_t load8(uint32_t addr) const;

 private:
  void store8(uint32_t addr, uint8_t v, const Taint& t);
  void store(uint32_t addr, uint32_t v, unsigned size, const Taint& t, TraceEntry& te);
  Taint mem_taint(uint32_t addr, unsigned size) const;

  FirmwareImage image_;
  MachineState state_;
  TpmDevice tpm_;
  ExecutionTrace trace_;
};

struct RunResult {
  MachineState state;
  TpmDevice tpm;
  ExecutionTrace trace;
};

// Runs from the entry point until HALT. Throws StepBudgetExceeded when the
// program has not halted after `max_steps` instructions.
RunResult run(const FirmwareImage& image, uint64_t max_steps);

}  // namespace bootkeeper
