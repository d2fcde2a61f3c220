#include "bootkeeper/isa.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>

namespace bootkeeper {

const char* errc_name(Errc e) {
  switch (e) {
    case Errc::UnknownOpcode: return "UnknownOpcode";
    case Errc::RegisterOutOfRange: return "RegisterOutOfRange";
    case Errc::UndefinedLabel: return "UndefinedLabel";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::TruncatedImage: return "TruncatedImage";
    case Errc::EntryOutOfRange: return "EntryOutOfRange";
    case Errc::ImageTooLarge: return "ImageTooLarge";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::MemFault: return "MemFault";
    case Errc::UnalignedPc: return "UnalignedPc";
    case Errc::StackUnderflow: return "StackUnderflow";
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
    case Errc::AnalysisTimeout: return "AnalysisTimeout";
    case Errc::IncompleteCfg: return "IncompleteCfg";
    case Errc::InvalidPath: return "InvalidPath";
    case Errc::UnknownFixture: return "UnknownFixture";
    case Errc::IoError: return "IoError";
  }
  return "Error";
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

namespace {

struct OpInfo {
  Opcode op;
  const char* name;
  Format format;
};

constexpr OpInfo kOps[] = {
    {Opcode::HALT, "HALT", Format::None},      {Opcode::MOVI, "MOVI", Format::RdImm},
    {Opcode::MOV, "MOV", Format::RdRs},        {Opcode::ADD, "ADD", Format::RdRsRs},
    {Opcode::ADDI, "ADDI", Format::RdRsImm},   {Opcode::SUB, "SUB", Format::RdRsRs},
    {Opcode::SUBI, "SUBI", Format::RdRsImm},   {Opcode::AND, "AND", Format::RdRsRs},
    {Opcode::ANDI, "ANDI", Format::RdRsImm},   {Opcode::OR, "OR", Format::RdRsRs},
    {Opcode::ORI, "ORI", Format::RdRsImm},     {Opcode::XOR, "XOR", Format::RdRsRs},
    {Opcode::XORI, "XORI", Format::RdRsImm},   {Opcode::SHL, "SHL", Format::RdRsRs},
    {Opcode::SHLI, "SHLI", Format::RdRsImm},   {Opcode::SHR, "SHR", Format::RdRsRs},
    {Opcode::SHRI, "SHRI", Format::RdRsImm},   {Opcode::ROL, "ROL", Format::RdRsRs},
    {Opcode::ROLI, "ROLI", Format::RdRsImm},   {Opcode::LOAD, "LOAD", Format::Load},
    {Opcode::STORE, "STORE", Format::Store},   {Opcode::LOADB, "LOADB", Format::Load},
    {Opcode::STOREB, "STOREB", Format::Store}, {Opcode::JMP, "JMP", Format::Target},
    {Opcode::JMPR, "JMPR", Format::Reg},       {Opcode::BEQ, "BEQ", Format::Branch},
    {Opcode::BNE, "BNE", Format::Branch},      {Opcode::BLTU, "BLTU", Format::Branch},
    {Opcode::BGEU, "BGEU", Format::Branch},    {Opcode::CALL, "CALL", Format::Target},
    {Opcode::CALLR, "CALLR", Format::Reg},     {Opcode::RET, "RET", Format::None},
};

const OpInfo* info(Opcode op) {
  for (const auto& i : kOps)
    if (i.op == op) return &i;
  return nullptr;
}

uint32_t rd32(std::span<const uint8_t> b, size_t off) {
  return uint32_t{b[off]} | uint32_t{b[off + 1]} << 8 | uint32_t{b[off + 2]} << 16 |
         uint32_t{b[off + 3]} << 24;
}

void wr32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

const char* mnemonic(Opcode op) {
  const OpInfo* i = info(op);
  return i ? i->name : "???";
}

std::optional<Opcode> opcode_from_byte(uint8_t b) {
  for (const auto& i : kOps)
    if (static_cast<uint8_t>(i.op) == b) return i.op;
  return std::nullopt;
}

std::optional<Opcode> opcode_from_mnemonic(const std::string& m) {
  for (const auto& i : kOps)
    if (m == i.name) return i.op;
  return std::nullopt;
}

Format format_of(Opcode op) { return info(op)->format; }

bool is_alu_reg(Opcode op) { return format_of(op) == Format::RdRsRs; }
bool is_alu_imm(Opcode op) { return format_of(op) == Format::RdRsImm; }

bool is_branch(Opcode op) { return format_of(op) == Format::Branch; }

bool is_terminator(Opcode op) {
  switch (op) {
    case Opcode::HALT:
    case Opcode::JMP:
    case Opcode::JMPR:
    case Opcode::BEQ:
    case Opcode::BNE:
    case Opcode::BLTU:
    case Opcode::BGEU:
    case Opcode::CALL:
    case Opcode::CALLR:
    case Opcode::RET:
      return true;
    default:
      return false;
  }
}

bool writes_rd(Opcode op) {
  switch (format_of(op)) {
    case Format::RdImm:
    case Format::RdRs:
    case Format::RdRsRs:
    case Format::RdRsImm:
    case Format::Load:
      return true;
    default:
      return false;
  }
}

std::string Instruction::to_string() const {
  char buf[96];
  const char* m = mnemonic(opcode);
  switch (format_of(opcode)) {
    case Format::None: std::snprintf(buf, sizeof buf, "%s", m); break;
    case Format::RdImm: std::snprintf(buf, sizeof buf, "%s r%u, 0x%x", m, rd, imm); break;
    case Format::RdRs: std::snprintf(buf, sizeof buf, "%s r%u, r%u", m, rd, rs1); break;
    case Format::RdRsRs: std::snprintf(buf, sizeof buf, "%s r%u, r%u, r%u", m, rd, rs1, rs2); break;
    case Format::RdRsImm: std::snprintf(buf, sizeof buf, "%s r%u, r%u, 0x%x", m, rd, rs1, imm); break;
    case Format::Load: std::snprintf(buf, sizeof buf, "%s r%u, [r%u+0x%x]", m, rd, rs1, imm); break;
    case Format::Store: std::snprintf(buf, sizeof buf, "%s [r%u+0x%x], r%u", m, rs1, imm, rs2); break;
    case Format::Target: std::snprintf(buf, sizeof buf, "%s 0x%x", m, imm); break;
    case Format::Reg: std::snprintf(buf, sizeof buf, "%s r%u", m, rs1); break;
    case Format::Branch: std::snprintf(buf, sizeof buf, "%s r%u, r%u, 0x%x", m, rs1, rs2, imm); break;
  }
  return buf;
}

Instruction decode(std::span<const uint8_t> bytes8, uint32_t addr) {
  if (bytes8.size() != kInstrSize)
    throw Error(Errc::TruncatedImage, "instruction unit must be 8 bytes at " + hex32(addr));
  auto op = opcode_from_byte(bytes8[0]);
  if (!op) throw Error(Errc::UnknownOpcode, "byte " + std::to_string(bytes8[0]) + " at " + hex32(addr));
  if (bytes8[1] >= kNumRegs || bytes8[2] >= kNumRegs || bytes8[3] >= kNumRegs)
    throw Error(Errc::RegisterOutOfRange, "at " + hex32(addr));
  Instruction inst;
  inst.opcode = *op;
  inst.rd = bytes8[1];
  inst.rs1 = bytes8[2];
  inst.rs2 = bytes8[3];
  inst.imm = rd32(bytes8, 4);
  inst.addr = addr;
  return inst;
}

EncodedInstr encode(const Instruction& inst) {
  EncodedInstr out{};
  out[0] = static_cast<uint8_t>(inst.opcode);
  out[1] = inst.rd;
  out[2] = inst.rs1;
  out[3] = inst.rs2;
  for (int i = 0; i < 4; ++i) out[4 + i] = static_cast<uint8_t>(inst.imm >> (8 * i));
  return out;
}

AddressRange make_range(uint32_t start, uint32_t length) {
  if (length == 0) throw Error(Errc::IndexOutOfRange, "empty address range");
  if (uint64_t{start} + length > (uint64_t{1} << 32))
    throw Error(Errc::IndexOutOfRange, "address range wraps at " + hex32(start));
  return {start, length};
}

std::vector<AddressRange> normalize_ranges(std::vector<AddressRange> ranges) {
  std::erase_if(ranges, [](const AddressRange& r) { return r.length == 0; });
  std::sort(ranges.begin(), ranges.end());
  std::vector<AddressRange> out;
  for (const auto& r : ranges) {
    if (!out.empty() && out.back().end() >= r.start) {
      uint64_t e = std::max(out.back().end(), r.end());
      out.back().length = static_cast<uint32_t>(e - out.back().start);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<AddressRange> subtract_ranges(const std::vector<AddressRange>& from,
                                          const std::vector<AddressRange>& minus) {
  auto cut = normalize_ranges(minus);
  std::vector<AddressRange> out;
  for (const auto& r : normalize_ranges(from)) {
    uint64_t cur = r.start;
    const uint64_t end = r.end();
    for (const auto& m : cut) {
      if (m.end() <= cur || m.start >= end) continue;
      if (m.start > cur) out.push_back({static_cast<uint32_t>(cur), static_cast<uint32_t>(m.start - cur)});
      cur = std::max<uint64_t>(cur, m.end());
      if (cur >= end) break;
    }
    if (cur < end) out.push_back({static_cast<uint32_t>(cur), static_cast<uint32_t>(end - cur)});
  }
  return out;
}

std::vector<AddressRange> intersect_ranges(const std::vector<AddressRange>& a,
                                           const std::vector<AddressRange>& b) {
  auto na = normalize_ranges(a);
  auto nb = normalize_ranges(b);
  std::vector<AddressRange> out;
  for (const auto& x : na)
    for (const auto& y : nb) {
      uint64_t s = std::max<uint64_t>(x.start, y.start);
      uint64_t e = std::min(x.end(), y.end());
      if (s < e) out.push_back({static_cast<uint32_t>(s), static_cast<uint32_t>(e - s)});
    }
  return normalize_ranges(std::move(out));
}

bool range_covered(const AddressRange& r, const std::vector<AddressRange>& cover) {
  return subtract_ranges({r}, cover).empty();
}

Instruction FirmwareImage::instruction_at(uint32_t addr) const {
  if (!in_code(addr) || (addr - load_base) % kInstrSize != 0 || addr - load_base + kInstrSize > code.size())
    throw Error(Errc::MemFault, "no instruction at " + hex32(addr));
  return decode(std::span(code).subspan(addr - load_base, kInstrSize), addr);
}

std::optional<uint8_t> FirmwareImage::rom_byte(uint32_t addr) const {
  if (in_code(addr)) return code[addr - load_base];
  if (data_range().contains(addr)) return data[addr - data_base()];
  return std::nullopt;
}

void check_image(const FirmwareImage& image) {
  if (image.version != kImageVersion) throw Error(Errc::BadVersion, std::to_string(image.version));
  if (image.code.size() % kInstrSize != 0)
    throw Error(Errc::TruncatedImage, "code length is not a multiple of 8");
  if (image.code.size() + image.data.size() > kMaxImageSize)
    throw Error(Errc::ImageTooLarge, std::to_string(image.code.size() + image.data.size()) + " bytes");
  if (!image.in_code(image.entry) || (image.entry - kLoadBase) % kInstrSize != 0)
    throw Error(Errc::EntryOutOfRange, hex32(image.entry));
}

std::vector<uint8_t> serialize(const FirmwareImage& image) {
  check_image(image);
  std::vector<uint8_t> out(kImageMagic.begin(), kImageMagic.end());
  const auto code_size = static_cast<uint32_t>(image.code.size());
  const auto data_size = static_cast<uint32_t>(image.data.size());
  wr32(out, image.version);
  wr32(out, image.entry);
  wr32(out, kHeaderSize);
  wr32(out, code_size);
  wr32(out, kHeaderSize + code_size);
  wr32(out, data_size);
  wr32(out, 0);
  out.insert(out.end(), image.code.begin(), image.code.end());
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

FirmwareImage load_image(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw Error(Errc::TruncatedImage, "header needs 32 bytes");
  if (!std::equal(kImageMagic.begin(), kImageMagic.end(), bytes.begin()))
    throw Error(Errc::BadMagic, std::string(bytes.begin(), bytes.begin() + 4));
  FirmwareImage img;
  img.version = rd32(bytes, 4);
  if (img.version != kImageVersion) throw Error(Errc::BadVersion, std::to_string(img.version));
  img.entry = rd32(bytes, 8);
  const uint64_t code_off = rd32(bytes, 12), code_size = rd32(bytes, 16);
  const uint64_t data_off = rd32(bytes, 20), data_size = rd32(bytes, 24);
  if (code_size + data_size > kMaxImageSize) throw Error(Errc::ImageTooLarge, "sections exceed 64 KiB");
  if (code_off + code_size > bytes.size() || data_off + data_size > bytes.size())
    throw Error(Errc::TruncatedImage, "section extends past end of file");
  img.code.assign(bytes.begin() + code_off, bytes.begin() + code_off + code_size);
  img.data.assign(bytes.begin() + data_off, bytes.begin() + data_off + data_size);
  check_image(img);
  return img;
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path);
}

}  // namespace bootkeeper
