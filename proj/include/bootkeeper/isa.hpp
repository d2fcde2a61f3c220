#pragma once

// Firmware virtual ISA: 8 registers, fixed 8-byte instructions, and the
// `.fw` image container.
//
// Encoding: byte0 = opcode, byte1 = rd, byte2 = rs1, byte3 = rs2,
// bytes4..7 = imm (little-endian). Branch and jump immediates are absolute
// addresses. r7 is the stack pointer used by CALL/RET.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bootkeeper/error.hpp"

namespace bootkeeper {

enum class Opcode : uint8_t {
  HALT = 0x00,
  MOVI = 0x01,
  MOV = 0x02,
  ADD = 0x10,
  ADDI = 0x11,
  SUB = 0x12,
  SUBI = 0x13,
  AND = 0x14,
  ANDI = 0x15,
  OR = 0x16,
  ORI = 0x17,
  XOR = 0x18,
  XORI = 0x19,
  SHL = 0x1A,
  SHLI = 0x1B,
  SHR = 0x1C,
  SHRI = 0x1D,
  ROL = 0x1E,
  ROLI = 0x1F,
  LOAD = 0x20,
  STORE = 0x21,
  LOADB = 0x22,
  STOREB = 0x23,
  JMP = 0x30,
  JMPR = 0x31,
  BEQ = 0x32,
  BNE = 0x33,
  BLTU = 0x34,
  BGEU = 0x35,
  CALL = 0x40,
  CALLR = 0x41,
  RET = 0x42,
};

inline constexpr uint8_t kNumRegs = 8;
inline constexpr uint8_t kStackReg = 7;
inline constexpr uint32_t kInstrSize = 8;

// Memory map.
inline constexpr uint32_t kLoadBase = 0x0010'0000;
inline constexpr uint32_t kMaxImageSize = 64 * 1024;
inline constexpr uint32_t kStackBase = 0x001F'0000;
inline constexpr uint32_t kStackTop = 0x0020'0000;
inline constexpr uint32_t kRamBase = 0x0030'0000;
inline constexpr uint32_t kRamSize = 0x0001'0000;
inline constexpr uint32_t kTpmBase = 0xFED4'0000;
inline constexpr uint32_t kTpmSize = 0x1000;
inline constexpr uint32_t kTpmDataFifo = 0xFED4'0024;

const char* mnemonic(Opcode op);
std::optional<Opcode> opcode_from_byte(uint8_t b);
std::optional<Opcode> opcode_from_mnemonic(const std::string& m);

// Operand shape, used by the assembler, disassembler and analyses.
enum class Format {
  None,       // HALT, RET
  RdImm,      // MOVI rd, imm
  RdRs,       // MOV rd, rs1
  RdRsRs,     // ADD rd, rs1, rs2
  RdRsImm,    // ADDI rd, rs1, imm
  Load,       // LOAD rd, [rs1+imm]
  Store,      // STORE [rs1+imm], rs2
  Target,     // JMP imm / CALL imm
  Reg,        // JMPR rs1 / CALLR rs1
  Branch,     // BEQ rs1, rs2, imm
};

Format format_of(Opcode op);

bool is_alu_reg(Opcode op);
bool is_alu_imm(Opcode op);
bool is_branch(Opcode op);
bool is_terminator(Opcode op);
// True when the instruction writes `rd`.
bool writes_rd(Opcode op);

struct Instruction {
  Opcode opcode = Opcode::HALT;
  uint8_t rd = 0;
  uint8_t rs1 = 0;
  uint8_t rs2 = 0;
  uint32_t imm = 0;
  uint32_t addr = 0;

  bool operator==(const Instruction&) const = default;

  // Equality ignoring the address.
  bool same_encoding(const Instruction& o) const {
    return opcode == o.opcode && rd == o.rd && rs1 == o.rs1 && rs2 == o.rs2 && imm == o.imm;
  }

  std::string to_string() const;
};

using EncodedInstr = std::array<uint8_t, kInstrSize>;

Instruction decode(std::span<const uint8_t> bytes8, uint32_t addr);
EncodedInstr encode(const Instruction& inst);

struct AddressRange {
  uint32_t start = 0;
  uint32_t length = 0;

  uint64_t end() const { return uint64_t{start} + length; }
  bool contains(uint32_t addr) const { return addr >= start && addr < end(); }
  bool operator==(const AddressRange&) const = default;
  auto operator<=>(const AddressRange&) const = default;
};

AddressRange make_range(uint32_t start, uint32_t length);

// Sorted, coalesced set arithmetic over byte ranges.
std::vector<AddressRange> normalize_ranges(std::vector<AddressRange> ranges);
std::vector<AddressRange> subtract_ranges(const std::vector<AddressRange>& from,
                                          const std::vector<AddressRange>& minus);
std::vector<AddressRange> intersect_ranges(const std::vector<AddressRange>& a,
                                           const std::vector<AddressRange>& b);
bool range_covered(const AddressRange& r, const std::vector<AddressRange>& cover);

inline constexpr std::array<char, 4> kImageMagic = {'F', 'W', 'I', 'M'};
inline constexpr uint32_t kImageVersion = 1;
inline constexpr uint32_t kHeaderSize = 32;

struct FirmwareImage {
  uint32_t version = kImageVersion;
  uint32_t entry = kLoadBase;
  std::vector<uint8_t> code;
  std::vector<uint8_t> data;

  static constexpr uint32_t load_base = kLoadBase;
  uint32_t data_base() const { return (load_base + static_cast<uint32_t>(code.size()) + 15u) & ~15u; }
  AddressRange code_range() const { return {load_base, static_cast<uint32_t>(code.size())}; }
  AddressRange data_range() const { return {data_base(), static_cast<uint32_t>(data.size())}; }

  bool in_code(uint32_t addr) const { return code_range().contains(addr); }
  // Instruction at `addr`; throws on out-of-range or undecodable bytes.
  Instruction instruction_at(uint32_t addr) const;
  // Read-only view of one byte of the image (code or data); nullopt otherwise.
  std::optional<uint8_t> rom_byte(uint32_t addr) const;

  bool operator==(const FirmwareImage&) const = default;
};

// Throws Error on invariant violations (entry, alignment, size).
void check_image(const FirmwareImage& image);
std::vector<uint8_t> serialize(const FirmwareImage& image);
FirmwareImage load_image(std::span<const uint8_t> bytes);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> bytes);

}  // namespace bootkeeper
