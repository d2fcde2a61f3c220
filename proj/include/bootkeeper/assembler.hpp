#pragma once

// Text assembler for `.fasm` sources.
//
//   # comment
//   label:                      code or data label (depends on current section)
//   MOVI r0, label+8            operands accept `a + b - c` over numbers/symbols
//   LOAD r1, [r2+0x10]          memory operand; `[r2]` and `[r2-4]` also accepted
//   .entry label                entry point (defaults to the start of code)
//   .code / .data               switch section
//   .word e, ...  .byte e, ...  raw little-endian data (allowed in both sections)
//   .space n                    n zero bytes
//   .equ NAME, expr             named constant

#include <map>
#include <string>
#include <string_view>

#include "bootkeeper/isa.hpp"

namespace bootkeeper {

struct AssemblyResult {
  FirmwareImage image;
  std::map<std::string, uint32_t> symbols;  // labels and .equ values
};

AssemblyResult assemble_with_symbols(std::string_view source);
FirmwareImage assemble(std::string_view source);

// One instruction per line, `addr: text`.
std::string disassemble(const FirmwareImage& image);

}  // namespace bootkeeper
