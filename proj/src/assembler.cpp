#include "bootkeeper/assembler.hpp"

#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace bootkeeper {
namespace {

enum class Section { Code, Data };

struct Line {
  int number = 0;
  Section section = Section::Code;
  std::string head;                // mnemonic or directive
  std::vector<std::string> args;   // comma separated operands, trimmed
  uint32_t offset = 0;             // section offset
};

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_ident(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.'))
    return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

[[noreturn]] void syntax(int line, const std::string& msg) {
  throw Error(Errc::SyntaxError, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

class Assembler {
 public:
  explicit Assembler(std::string_view src) { parse(src); }

  AssemblyResult run() {
    uint32_t code_size = code_off_;
    if (code_size % kInstrSize != 0)
      throw Error(Errc::SyntaxError, "code section length " + std::to_string(code_size) + " is not a multiple of 8");
    FirmwareImage img;
    img.code.resize(code_size);
    img.data.resize(data_off_);
    const uint32_t data_base = (kLoadBase + code_size + 15u) & ~15u;
    for (auto& [name, lab] : labels_)
      symbols_[name] = (lab.first == Section::Code ? kLoadBase : data_base) + lab.second;

    for (const auto& ln : lines_) {
      auto& buf = ln.section == Section::Code ? img.code : img.data;
      emit(ln, buf);
    }
    img.entry = entry_label_.empty() ? kLoadBase : eval(entry_label_, entry_line_);
    if (code_size == 0) throw Error(Errc::SyntaxError, "empty code section");
    check_image(img);
    AssemblyResult res;
    res.image = std::move(img);
    for (const auto& [n, _] : symbols_) res.symbols[n] = symbol_value(n, 0);
    return res;
  }

 private:
  void define_label(const std::string& name, int line) {
    if (!is_ident(name)) syntax(line, "bad label '" + name + "'");
    if (labels_.count(name) || equs_.count(name))
      throw Error(Errc::DuplicateLabel, name + " (line " + std::to_string(line) + ")");
    labels_[name] = {section_, section_ == Section::Code ? code_off_ : data_off_};
  }

  uint32_t& cursor() { return section_ == Section::Code ? code_off_ : data_off_; }

  void parse(std::string_view src) {
    std::istringstream in{std::string(src)};
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
      ++number;
      if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
      std::string text = trim(raw);
      // Leading labels.
      for (;;) {
        auto colon = text.find(':');
        if (colon == std::string::npos) break;
        std::string name = trim(text.substr(0, colon));
        if (!is_ident(name) || name.find('[') != std::string::npos) break;
        define_label(name, number);
        text = trim(text.substr(colon + 1));
      }
      if (text.empty()) continue;
      Line ln;
      ln.number = number;
      auto sp = text.find_first_of(" \t");
      ln.head = sp == std::string::npos ? text : text.substr(0, sp);
      if (sp != std::string::npos) ln.args = split_args(text.substr(sp + 1));
      const std::string head = ln.head;
      if (head == ".code") { section_ = Section::Code; continue; }
      if (head == ".data") { section_ = Section::Data; continue; }
      if (head == ".entry") {
        if (ln.args.size() != 1) syntax(number, ".entry takes one operand");
        entry_label_ = ln.args[0];
        entry_line_ = number;
        continue;
      }
      if (head == ".equ") {
        if (ln.args.size() != 2 || !is_ident(ln.args[0])) syntax(number, ".equ NAME, expr");
        if (labels_.count(ln.args[0]) || equs_.count(ln.args[0]))
          throw Error(Errc::DuplicateLabel, ln.args[0]);
        equs_[ln.args[0]] = {ln.args[1], number};
        continue;
      }
      ln.section = section_;
      ln.offset = cursor();
      if (head == ".word") {
        cursor() += 4 * static_cast<uint32_t>(ln.args.size());
      } else if (head == ".byte") {
        cursor() += static_cast<uint32_t>(ln.args.size());
      } else if (head == ".space") {
        if (ln.args.size() != 1) syntax(number, ".space takes one operand");
        // Size must be known in pass one: numbers and .equ defined earlier only.
        cursor() += eval_early(ln.args[0], number);
      } else if (head[0] == '.') {
        syntax(number, "unknown directive " + head);
      } else {
        if (section_ != Section::Code) syntax(number, "instruction outside .code");
        if (!opcode_from_mnemonic(upper(head))) syntax(number, "unknown mnemonic " + head);
        cursor() += kInstrSize;
      }
      lines_.push_back(std::move(ln));
    }
  }

  uint32_t eval_early(const std::string& e, int line) {
    try {
      return eval(e, line);
    } catch (const Error& err) {
      if (err.code() == Errc::UndefinedLabel) syntax(line, ".space size must be a constant");
      throw;
    }
  }

  uint32_t symbol_value(const std::string& name, int line) {
    if (auto it = symbols_.find(name); it != symbols_.end()) return it->second;
    if (auto it = equs_.find(name); it != equs_.end()) {
      if (!resolving_.insert(name).second) syntax(line, "recursive .equ " + name);
      uint32_t v = eval(it->second.first, it->second.second);
      resolving_.erase(name);
      return v;
    }
    throw Error(Errc::UndefinedLabel, name + " (line " + std::to_string(line) + ")");
  }

  uint32_t eval(const std::string& expr, int line) {
    std::string e = trim(expr);
    if (e.empty()) syntax(line, "empty expression");
    uint32_t acc = 0;
    size_t i = 0;
    bool negate = false;
    bool expect_term = true;
    while (i < e.size()) {
      char c = e[i];
      if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
      if (expect_term) {
        if (c == '-') { negate = !negate; ++i; continue; }
        if (c == '+') { ++i; continue; }
        size_t j = i;
        while (j < e.size() && (std::isalnum(static_cast<unsigned char>(e[j])) || e[j] == '_' || e[j] == '.')) ++j;
        std::string tok = e.substr(i, j - i);
        if (tok.empty()) syntax(line, "bad expression '" + e + "'");
        uint32_t v;
        if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
          try {
            size_t used = 0;
            unsigned long long n = std::stoull(tok, &used, 0);
            if (used != tok.size() || n > 0xFFFFFFFFull) syntax(line, "bad number '" + tok + "'");
            v = static_cast<uint32_t>(n);
          } catch (const std::logic_error&) {
            syntax(line, "bad number '" + tok + "'");
          }
        } else {
          v = symbol_value(tok, line);
        }
        acc += negate ? static_cast<uint32_t>(0u - v) : v;
        negate = false;
        expect_term = false;
        i = j;
      } else {
        if (c == '+') negate = false;
        else if (c == '-') negate = true;
        else syntax(line, "expected + or - in '" + e + "'");
        expect_term = true;
        ++i;
      }
    }
    if (expect_term) syntax(line, "dangling operator in '" + e + "'");
    return acc;
  }

  static uint8_t reg(const std::string& s, int line) {
    std::string t = trim(s);
    if (t.size() != 2 || (t[0] != 'r' && t[0] != 'R') || !std::isdigit(static_cast<unsigned char>(t[1])))
      syntax(line, "expected register, got '" + t + "'");
    int r = t[1] - '0';
    if (r >= kNumRegs) throw Error(Errc::RegisterOutOfRange, t + " (line " + std::to_string(line) + ")");
    return static_cast<uint8_t>(r);
  }

  // "[rX+expr]" -> (rX, imm)
  std::pair<uint8_t, uint32_t> mem(const std::string& s, int line) {
    std::string t = trim(s);
    if (t.size() < 4 || t.front() != '[' || t.back() != ']') syntax(line, "expected memory operand, got '" + t + "'");
    std::string inner = trim(t.substr(1, t.size() - 2));
    uint8_t base = reg(inner.substr(0, 2), line);
    std::string rest = trim(inner.substr(2));
    uint32_t off = rest.empty() ? 0 : eval("0" + rest, line);
    return {base, off};
  }

  void emit(const Line& ln, std::vector<uint8_t>& buf) {
    const int n = ln.number;
    if (ln.head == ".word" || ln.head == ".byte") {
      uint32_t off = ln.offset;
      for (const auto& a : ln.args) {
        uint32_t v = eval(a, n);
        if (ln.head == ".byte") {
          if (v > 0xFF && v < 0xFFFFFF80u) syntax(n, "byte value out of range");
          buf[off++] = static_cast<uint8_t>(v);
        } else {
          for (int k = 0; k < 4; ++k) buf[off++] = static_cast<uint8_t>(v >> (8 * k));
        }
      }
      return;
    }
    if (ln.head == ".space") return;

    Opcode op = *opcode_from_mnemonic(upper(ln.head));
    Instruction in;
    in.opcode = op;
    in.addr = kLoadBase + ln.offset;
    auto need = [&](size_t k) {
      if (ln.args.size() != k)
        syntax(n, std::string(mnemonic(op)) + " expects " + std::to_string(k) + " operands");
    };
    switch (format_of(op)) {
      case Format::None: need(0); break;
      case Format::RdImm: need(2); in.rd = reg(ln.args[0], n); in.imm = eval(ln.args[1], n); break;
      case Format::RdRs: need(2); in.rd = reg(ln.args[0], n); in.rs1 = reg(ln.args[1], n); break;
      case Format::RdRsRs:
        need(3); in.rd = reg(ln.args[0], n); in.rs1 = reg(ln.args[1], n); in.rs2 = reg(ln.args[2], n);
        break;
      case Format::RdRsImm:
        need(3); in.rd = reg(ln.args[0], n); in.rs1 = reg(ln.args[1], n); in.imm = eval(ln.args[2], n);
        break;
      case Format::Load: {
        need(2);
        in.rd = reg(ln.args[0], n);
        auto [b, off] = mem(ln.args[1], n);
        in.rs1 = b;
        in.imm = off;
        break;
      }
      case Format::Store: {
        need(2);
        auto [b, off] = mem(ln.args[0], n);
        in.rs1 = b;
        in.imm = off;
        in.rs2 = reg(ln.args[1], n);
        break;
      }
      case Format::Target: need(1); in.imm = eval(ln.args[0], n); break;
      case Format::Reg: need(1); in.rs1 = reg(ln.args[0], n); break;
      case Format::Branch:
        need(3); in.rs1 = reg(ln.args[0], n); in.rs2 = reg(ln.args[1], n); in.imm = eval(ln.args[2], n);
        break;
    }
    auto enc = encode(in);
    std::copy(enc.begin(), enc.end(), buf.begin() + ln.offset);
  }

  std::vector<Line> lines_;
  Section section_ = Section::Code;
  uint32_t code_off_ = 0;
  uint32_t data_off_ = 0;
  std::map<std::string, std::pair<Section, uint32_t>> labels_;
  std::map<std::string, std::pair<std::string, int>> equs_;
  std::map<std::string, uint32_t> symbols_;
  std::set<std::string> resolving_;
  std::string entry_label_;
  int entry_line_ = 0;
};

}  // namespace

AssemblyResult assemble_with_symbols(std::string_view source) { return Assembler(source).run(); }

FirmwareImage assemble(std::string_view source) { return assemble_with_symbols(source).image; }

std::string disassemble(const FirmwareImage& image) {
  std::ostringstream out;
  for (uint32_t off = 0; off + kInstrSize <= image.code.size(); off += kInstrSize) {
    const uint32_t addr = kLoadBase + off;
    out << hex32(addr) << ": ";
    try {
      out << image.instruction_at(addr).to_string();
    } catch (const Error&) {
      out << "<invalid>";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace bootkeeper
