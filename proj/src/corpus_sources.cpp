#include "corpus_sources.hpp"

#include <cstdio>

#include "bootkeeper/corpus.hpp"

namespace bootkeeper::fixtures {

namespace {

std::string hx(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

class Src {
 public:
  Src& operator()(const std::string& line) {
    text_ += "  " + line + "\n";
    return *this;
  }
  Src& label(const std::string& name) {
    text_ += name + ":\n";
    return *this;
  }
  Src& raw(const std::string& text) {
    text_ += text;
    return *this;
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

struct RegMap {
  const char *a, *b, *c, *d, *e, *t, *x;
};

constexpr RegMap kCanonRegs{"r0", "r1", "r2", "r3", "r4", "r5", "r6"};
constexpr RegMap kRenamedRegs{"r3", "r0", "r4", "r1", "r2", "r6", "r5"};

std::string s(const char* r) { return r; }

// f(b, c, d) accumulated into e; x is scratch.
void round_function(Src& o, const RegMap& r, int type, Level level) {
  std::string b = r.b, c = r.c, d = r.d, e = r.e, x = r.x;
  switch (type) {
    case 0:
      if (level == Level::O2) {
        o("XOR " + x + ", " + d + ", " + c);
        o("AND " + x + ", " + b + ", " + x);
        o("XOR " + x + ", " + d + ", " + x);
      } else {
        o("XOR " + x + ", " + c + ", " + d);
        o("AND " + x + ", " + x + ", " + b);
        o("XOR " + x + ", " + x + ", " + d);
      }
      o("ADD " + e + ", " + e + ", " + x);
      break;
    case 2:
      o("AND " + x + ", " + b + ", " + c);
      o("ADD " + e + ", " + e + ", " + x);
      o("XOR " + x + ", " + b + ", " + c);
      o("AND " + x + ", " + x + ", " + d);
      o("ADD " + e + ", " + e + ", " + x);
      break;
    default:
      o("XOR " + x + ", " + b + ", " + c);
      o("XOR " + x + ", " + x + ", " + d);
      o("ADD " + e + ", " + e + ", " + x);
      break;
  }
}

void round_loop(Src& o, const Sha1Style& st, const RegMap& r, int type, uint32_t limit) {
  const std::string a = r.a, b = r.b, c = r.c, d = r.d, e = r.e, t = r.t, x = r.x;
  const std::string k = hx(st.k[type]);
  const std::string lbl = "sha1_round" + std::to_string(type);
  o.label(lbl);
  switch (st.level) {
    case Level::O0:
      o("STORE [r7-4], " + t);
      o("MOV " + x + ", " + a);
      o("SHLI " + t + ", " + x + ", 5");
      o("SHRI " + x + ", " + x + ", 27");
      o("OR " + x + ", " + t + ", " + x);
      o("LOAD " + t + ", [r7-4]");
      o("ADD " + e + ", " + e + ", " + x);
      o("LOAD " + x + ", [" + t + "+SHA_W]");
      o("ADD " + e + ", " + e + ", " + x);
      o("ADDI " + e + ", " + e + ", " + k);
      round_function(o, r, type, st.level);
      o("ROLI " + b + ", " + b + ", 30");
      o("STORE [r7-8], " + e);
      o("LOAD " + x + ", [r7-8]");
      break;
    case Level::O2:
      o("LOAD " + x + ", [" + t + "+SHA_W]");
      o("ADD " + e + ", " + e + ", " + x);
      o("ADDI " + e + ", " + e + ", " + k);
      o("ROLI " + x + ", " + a + ", 5");
      o("ADD " + e + ", " + e + ", " + x);
      round_function(o, r, type, st.level);
      o("ROLI " + b + ", " + b + ", 30");
      o("MOV " + x + ", " + e);
      break;
    default:
      o("ROLI " + x + ", " + a + ", 5");
      o("ADD " + e + ", " + e + ", " + x);
      o("LOAD " + x + ", [" + t + "+SHA_W]");
      o("ADD " + e + ", " + e + ", " + x);
      o("ADDI " + e + ", " + e + ", " + k);
      round_function(o, r, type, st.level);
      o("ROLI " + b + ", " + b + ", 30");
      o("MOV " + x + ", " + e);
      break;
  }
  o("MOV " + e + ", " + d);
  o("MOV " + d + ", " + c);
  o("MOV " + c + ", " + b);
  o("MOV " + b + ", " + a);
  o("MOV " + a + ", " + x);
  o("ADDI " + t + ", " + t + ", 4");
  o("MOVI " + x + ", " + std::to_string(limit));
  o(std::string(st.level == Level::Os ? "BNE " : "BLTU ") + t + ", " + x + ", " + lbl);
}

void wrapper(Src& o) {
  o.raw("# sha1(r0 = buf, r1 = len, r2 = out)\n");
  o.label("sha1");
  o("MOVI r6, SHA_CTX");
  o("STORE [r6+0], r0");
  o("STORE [r6+4], r1");
  o("STORE [r6+8], r1");
  o("STORE [r6+12], r2");
  o("MOVI r6, SHA_H");
  const uint32_t iv[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  for (int i = 0; i < 5; ++i) {
    o("MOVI r5, " + hx(iv[i]));
    o("STORE [r6+" + std::to_string(4 * i) + "], r5");
  }
  o.label("sha1_blocks");
  o("MOVI r6, SHA_CTX");
  o("LOAD r1, [r6+4]");
  o("MOVI r5, 64");
  o("BLTU r1, r5, sha1_tail");
  o("LOAD r0, [r6+0]");
  o("CALL sha1_compress");
  o("MOVI r6, SHA_CTX");
  o("LOAD r0, [r6+0]");
  o("ADDI r0, r0, 64");
  o("STORE [r6+0], r0");
  o("LOAD r1, [r6+4]");
  o("SUBI r1, r1, 64");
  o("STORE [r6+4], r1");
  o("JMP sha1_blocks");
  o.label("sha1_tail");
  o("LOAD r0, [r6+0]");
  o("MOVI r4, 0");
  o.label("sha1_copy");
  o("BGEU r4, r1, sha1_pad");
  o("ADD r5, r0, r4");
  o("LOADB r5, [r5+0]");
  o("STOREB [r4+SHA_BLK], r5");
  o("ADDI r4, r4, 1");
  o("JMP sha1_copy");
  o.label("sha1_pad");
  o("MOVI r5, 0x80");
  o("STOREB [r4+SHA_BLK], r5");
  o("ADDI r4, r4, 1");
  o("MOVI r5, 0");
  o.label("sha1_zero");
  o("MOVI r3, 128");
  o("BGEU r4, r3, sha1_len");
  o("STOREB [r4+SHA_BLK], r5");
  o("ADDI r4, r4, 1");
  o("JMP sha1_zero");
  o.label("sha1_len");
  o("MOVI r3, 64");
  o("MOVI r5, 56");
  o("BLTU r1, r5, sha1_end_set");
  o("MOVI r3, 128");
  o.label("sha1_end_set");
  o("STORE [r6+16], r3");
  o("LOAD r2, [r6+8]");
  o("SHRI r4, r2, 29");
  o("SHLI r2, r2, 3");
  o("ADDI r3, r3, SHA_BLK-8");
  for (const char* w : {"r4", "r2"}) {
    const int base = std::string(w) == "r4" ? 0 : 4;
    for (int sh = 24, i = 0; sh > 0; sh -= 8, ++i) {
      o(std::string("SHRI r5, ") + w + ", " + std::to_string(sh));
      o("STOREB [r3+" + std::to_string(base + i) + "], r5");
    }
    o("STOREB [r3+" + std::to_string(base + 3) + "], " + w);
  }
  o("MOVI r0, SHA_BLK");
  o("CALL sha1_compress");
  o("MOVI r6, SHA_CTX");
  o("LOAD r3, [r6+16]");
  o("MOVI r5, 64");
  o("BEQ r3, r5, sha1_out");
  o("MOVI r0, SHA_BLK+64");
  o("CALL sha1_compress");
  o.label("sha1_out");
  o("MOVI r6, SHA_CTX");
  o("LOAD r2, [r6+12]");
  o("MOVI r4, 0");
  o.label("sha1_out_loop");
  o("LOAD r5, [r4+SHA_H]");
  for (int sh = 24, i = 0; sh > 0; sh -= 8, ++i) {
    o("SHRI r3, r5, " + std::to_string(sh));
    o("STOREB [r2+" + std::to_string(i) + "], r3");
  }
  o("STOREB [r2+3], r5");
  o("ADDI r2, r2, 4");
  o("ADDI r4, r4, 4");
  o("MOVI r3, 20");
  o("BLTU r4, r3, sha1_out_loop");
  o("RET");
}

void compress(Src& o, const Sha1Style& st) {
  const bool os = st.level == Level::Os;
  const std::string loop_br = os ? "BNE " : "BLTU ";
  o.raw("# sha1_compress(r0 = 64-byte block)\n");
  o.label("sha1_compress");
  o("MOVI r5, 0");
  o.label("sha1_load");
  o("ADD r6, r0, r5");
  o("LOADB r1, [r6+0]");
  for (int i = 1; i < 4; ++i) {
    o("LOADB r2, [r6+" + std::to_string(i) + "]");
    o("SHLI r1, r1, 8");
    o("OR r1, r1, r2");
  }
  o("STORE [r5+SHA_W], r1");
  o("ADDI r5, r5, 4");
  o("MOVI r6, 64");
  o(loop_br + "r5, r6, sha1_load");

  o("MOVI r3, SHA_W+64");
  o.label("sha1_schedule");
  auto expand = [&](int off) {
    const auto m = [&](int d) { return "[r3-" + std::to_string(d - off) + "]"; };
    o("LOAD r1, " + m(12));
    o("LOAD r2, " + m(32));
    o("XOR r1, r1, r2");
    o("LOAD r2, " + m(56));
    o("XOR r1, r1, r2");
    o("LOAD r2, " + m(64));
    o("XOR r1, r1, r2");
    if (st.level == Level::O0) {
      o("SHLI r2, r1, 1");
      o("SHRI r1, r1, 31");
      o("OR r1, r1, r2");
    } else {
      o("ROLI r1, r1, 1");
    }
    o("STORE [r3+" + std::to_string(off) + "], r1");
  };
  expand(0);
  if (st.level == Level::O3) {
    expand(4);
    o("ADDI r3, r3, 8");
  } else {
    o("ADDI r3, r3, 4");
  }
  o("MOVI r2, SHA_W+320");
  o(loop_br + "r3, r2, sha1_schedule");

  const RegMap& r = st.level == Level::O2 ? kRenamedRegs : kCanonRegs;
  o("MOVI " + s(r.x) + ", SHA_H");
  const char* st_regs[5] = {r.a, r.b, r.c, r.d, r.e};
  for (int i = 0; i < 5; ++i) o("LOAD " + s(st_regs[i]) + ", [" + s(r.x) + "+" + std::to_string(4 * i) + "]");
  o("MOVI " + s(r.t) + ", 0");
  for (int type = 0; type < 4; ++type) round_loop(o, st, r, type, 80u * (type + 1));
  o("MOVI " + s(r.x) + ", SHA_H");
  for (int i = 0; i < 5; ++i) {
    const std::string off = std::to_string(4 * i);
    o("LOAD " + s(r.t) + ", [" + s(r.x) + "+" + off + "]");
    o("ADD " + s(st_regs[i]) + ", " + s(st_regs[i]) + ", " + s(r.t));
    o("STORE [" + s(r.x) + "+" + off + "], " + s(st_regs[i]));
  }
  o("RET");
}

// Main program prologue: sha1(start, measure_end - start, out).
void hash_call(Src& o, const std::string& out, const std::string& fn = "sha1") {
  o("MOVI r0, start");
  o("MOVI r1, measure_end-start");
  o("MOVI r2, " + out);
  o("CALL " + fn);
}

void send_words(Src& o, const std::string& buf, const Digest& d) {
  o("MOVI r1, " + buf);
  for (int i = 0; i < 5; ++i) {
    uint32_t w = 0;
    for (int j = 3; j >= 0; --j) w = (w << 8) | d[4 * i + j];
    o("MOVI r2, " + hx(w));
    o("STORE [r1+" + std::to_string(4 * i) + "], r2");
  }
}

std::string header(const std::string& title) {
  return "# " + title + "\n" + prelude() + "\n.entry start\n.code\n";
}

}  // namespace

std::string prelude() {
  Src o;
  const std::pair<const char*, uint32_t> equs[] = {
      {"TPM", 0xFED40000u},   {"TPM_FIFO", 0x24},        {"SHA_H", kShaH},
      {"SHA_W", kShaW},       {"SHA_BLK", kShaBlk},      {"SHA_CTX", kShaCtx},
      {"DIGEST", kDigestBuf}, {"REAL_BUF", kRealBuf},    {"DECOY_BUF", kDecoyBuf},
      {"SEND_BUF", kSendBuf}, {"DEBUG_FLAGS", kDebugFlags}, {"MARKER", kMarker},
  };
  for (auto& [n, v] : equs) o.raw(std::string(".equ ") + n + ", " + hx(v) + "\n");
  return o.str();
}

std::string sha1_routines(const Sha1Style& style) {
  Src o;
  wrapper(o);
  compress(o, style);
  return o.str();
}

std::string tpm_send(Level level) {
  Src o;
  o.raw("# tpm_send(r0 = 20-byte buffer)\n");
  if (level == Level::O0) {
    o.label("tpm_send");
    o("MOV r4, r0");
    o("CALL tpm_base");
    o("MOV r0, r4");
    o("MOVI r5, 0");
    o.label("tpm_send_loop");
    o("ADD r3, r0, r5");
    o("LOAD r2, [r3+0]");
    o("MOV r6, r2");
    o("STORE [r1+TPM_FIFO], r6");
    o("ADDI r5, r5, 4");
    o("MOVI r3, 20");
    o("BLTU r5, r3, tpm_send_loop");
    o("RET");
    o.label("tpm_base");
    o("MOVI r1, 0xFED00000");
    o("CALL tpm_offset");
    o("ADD r1, r1, r2");
    o("RET");
    o.label("tpm_offset");
    o("MOVI r2, 4");
    o("SHLI r2, r2, 16");
    o("RET");
    return o.str();
  }
  o.label("tpm_send");
  o("MOVI r1, TPM");
  o("MOVI r5, 0");
  o.label("tpm_send_loop");
  o("ADD r3, r0, r5");
  o("LOAD r2, [r3+0]");
  o("STORE [r1+TPM_FIFO], r2");
  o("ADDI r5, r5, 4");
  o("MOVI r3, 20");
  o(std::string(level == Level::Os ? "BNE" : "BLTU") + " r5, r3, tpm_send_loop");
  o("RET");
  return o.str();
}

namespace {

constexpr int kO0DebugFlags = 5;

// O1 layout with a hook call through .data and a reserved slot after the
// measured region. `slot` fills the 64-byte slot, `hook` names the target.
std::string o1_like(const Sha1Style& st, const std::string& title, const std::string& slot,
                    const std::string& hook) {
  Src o;
  o.raw(header(title));
  o.label("start");
  hash_call(o, "DIGEST");
  o("MOVI r0, DIGEST");
  o("CALL tpm_send");
  o("MOVI r1, hook_ptr");
  o("LOAD r1, [r1+0]");
  o("CALLR r1");
  o("HALT");
  o.raw(tpm_send(Level::O1));
  o.label("hook_default");
  o("MOVI r0, 0");
  o("RET");
  o.raw(sha1_routines(st));
  o.label("measure_end");
  o.label("reserved");
  o.raw(slot);
  o.raw(".data\n");
  o.label("hook_ptr");
  o(".word " + hook);
  return o.str();
}

}  // namespace

std::string benign(Level level) {
  Sha1Style st;
  st.level = level;
  switch (level) {
    case Level::O1:
      return o1_like(st, "benign, canonical layout", "  .space 64\n", "hook_default");
    case Level::O0: {
      Src o;
      o.raw(header("benign, unoptimized layout"));
      o.label("start");
      o("MOVI r3, DEBUG_FLAGS");
      for (int i = 0; i < kO0DebugFlags; ++i) {
        const std::string skip = "dbg_skip" + std::to_string(i);
        o("LOAD r4, [r3+" + std::to_string(4 * i) + "]");
        o("MOVI r6, 0");
        o("BEQ r4, r6, " + skip);
        o("LOAD r5, [r3+0x80]");
        o("ADDI r5, r5, 1");
        o("STORE [r3+0x80], r5");
        o.label(skip);
      }
      hash_call(o, "DIGEST", "measure");
      o("MOVI r0, DIGEST");
      o("CALL tpm_send");
      o("HALT");
      o.label("measure");
      o("MOV r6, r0");
      o("MOV r0, r6");
      o("CALL hash_region");
      o("RET");
      o.label("hash_region");
      o("CALL sha1");
      o("RET");
      o.raw(tpm_send(Level::O0));
      o.raw(sha1_routines(st));
      o.label("measure_end");
      return o.str();
    }
    case Level::O2: {
      Src o;
      o.raw(header("benign, renamed and reordered"));
      o.label("start");
      o("MOVI r2, DIGEST");
      o("MOVI r1, measure_end-start");
      o("MOVI r0, start");
      o("CALL sha1");
      o("MOVI r5, 0");
      o("MOVI r1, TPM");
      o("MOVI r0, DIGEST");
      o.label("send_loop");
      o("ADD r3, r0, r5");
      o("LOAD r2, [r3+0]");
      o("ADDI r5, r5, 4");
      o("STORE [r1+TPM_FIFO], r2");
      o("MOVI r3, 20");
      o("BLTU r5, r3, send_loop");
      o("HALT");
      o.raw(sha1_routines(st));
      o.label("measure_end");
      return o.str();
    }
    case Level::O3:
    case Level::Os: {
      Src o;
      o.raw(header(level == Level::O3 ? "benign, unrolled schedule" : "benign, size-optimized"));
      o.label("start");
      hash_call(o, "DIGEST");
      o("MOVI r0, DIGEST");
      o("CALL tpm_send");
      o("HALT");
      o.raw(tpm_send(level));
      o.raw(sha1_routines(st));
      o.label("measure_end");
      return o.str();
    }
  }
  return {};
}

std::string a1_no_hash() {
  Src o;
  o.raw(header("attack: constant sent without hashing"));
  o.label("start");
  o("MOVI r1, TPM");
  o("MOVI r2, 0x11223344");
  o("MOVI r5, 0");
  o.label("send_loop");
  o("STORE [r1+TPM_FIFO], r2");
  o("ADDI r5, r5, 1");
  o("MOVI r3, 5");
  o("BLTU r5, r3, send_loop");
  o("HALT");
  o.label("measure_end");
  return o.str();
}

std::string a2_tampered(const Sha1::RoundConstants& k) {
  Sha1Style st;
  st.k = k;
  return o1_like(st, "attack: modified round constant", "  .space 64\n", "hook_default");
}

std::string a3_hidden_code() {
  Src slot;
  slot("MOVI r1, MARKER");
  slot("MOVI r2, 0x0BADC0DE");
  slot("STORE [r1+0], r2");
  slot("RET");
  slot(".space 32");
  return o1_like(Sha1Style{}, "attack: code outside the measured region", slot.str(), "reserved");
}

std::string a4_forged_params(const std::vector<uint8_t>& dormant) {
  Src o;
  o.raw(header("attack: measures a dormant copy"));
  o.label("start");
  o("MOVI r0, dormant");
  o("MOVI r1, " + std::to_string(dormant.size()));
  o("MOVI r2, DIGEST");
  o("CALL sha1");
  o("MOVI r0, DIGEST");
  o("CALL tpm_send");
  o("MOVI r1, MARKER");
  o("MOVI r2, 0xA4A4A4A4");
  o("STORE [r1+0], r2");
  o("HALT");
  o.raw(tpm_send(Level::O1));
  o.raw(sha1_routines(Sha1Style{}));
  o.label("dormant");
  for (size_t i = 0; i < dormant.size(); i += 16) {
    std::string line = ".byte ";
    for (size_t j = i; j < dormant.size() && j < i + 16; ++j) {
      char b[8];
      std::snprintf(b, sizeof b, "0x%02X", dormant[j]);
      line += (j == i ? "" : ", ") + std::string(b);
    }
    o(line);
  }
  return o.str();
}

std::string a5_overwrite(const Digest& forged) {
  Src o;
  o.raw(header("attack: digest overwritten before sending"));
  o.label("start");
  hash_call(o, "DIGEST");
  send_words(o, "DIGEST", forged);
  o("MOVI r0, DIGEST");
  o("CALL tpm_send");
  o("HALT");
  o.raw(tpm_send(Level::O1));
  o.raw(sha1_routines(Sha1Style{}));
  o.label("measure_end");
  return o.str();
}

std::string a6_decoy(const Digest& forged) {
  Src o;
  o.raw(header("attack: real digest parked in a decoy buffer"));
  o.label("start");
  hash_call(o, "REAL_BUF");
  o("MOVI r5, 0");
  o.label("copy_loop");
  o("ADDI r3, r5, REAL_BUF");
  o("LOAD r2, [r3+0]");
  o("ADDI r3, r5, DECOY_BUF");
  o("STORE [r3+0], r2");
  o("ADDI r5, r5, 4");
  o("MOVI r3, 20");
  o("BLTU r5, r3, copy_loop");
  send_words(o, "SEND_BUF", forged);
  o("MOVI r0, SEND_BUF");
  o("CALL tpm_send");
  o("HALT");
  o.raw(tpm_send(Level::O1));
  o.raw(sha1_routines(Sha1Style{}));
  o.label("measure_end");
  return o.str();
}

std::string stress() {
  Src o;
  o.raw(header("stress: data-dependent branching over uninitialized RAM"));
  o.label("start");
  o("MOVI r5, 0");
  o("MOVI r1, 0x00302000");
  o("MOVI r0, 0");
  o.label("outer");
  o("SHLI r3, r5, 2");
  o("ADD r3, r3, r1");
  o("LOAD r2, [r3+0]");
  o("MOVI r4, 0");
  o("BEQ r2, r4, skip");
  o("ADDI r0, r0, 1");
  o.label("skip");
  o.label("inner");
  o("ADDI r4, r4, 1");
  o("BLTU r4, r2, inner");
  o("ADDI r5, r5, 1");
  o("MOVI r6, 1000");
  o("BLTU r5, r6, outer");
  o("MOVI r1, TPM");
  o("MOVI r2, 0x5354524D");
  o("MOVI r5, 0");
  o.label("send_loop");
  o("STORE [r1+TPM_FIFO], r2");
  o("ADDI r5, r5, 1");
  o("MOVI r3, 5");
  o("BLTU r5, r3, send_loop");
  o("HALT");
  o.label("measure_end");
  return o.str();
}

std::string crc32_control() {
  Src o;
  o.raw(header("control: CRC32 measurement"));
  o.raw(".equ CRC_OUT, 0x00300510\n");
  o.label("start");
  hash_call(o, "DIGEST", "crc32");
  o("MOVI r0, DIGEST");
  o("CALL tpm_send");
  o("HALT");
  o.raw(tpm_send(Level::O1));
  o.raw("# crc32(r0 = buf, r1 = len, r2 = out), result repeated five times\n");
  o.label("crc32");
  o("MOVI r5, CRC_OUT");
  o("STORE [r5+0], r2");
  o("MOVI r3, 0xFFFFFFFF");
  o("MOVI r4, 0");
  o.label("crc_byte");
  o("BGEU r4, r1, crc_done");
  o("ADD r5, r0, r4");
  o("LOADB r5, [r5+0]");
  o("XOR r3, r3, r5");
  o("MOVI r6, 0");
  o.label("crc_bit");
  o("ANDI r5, r3, 1");
  o("SHRI r3, r3, 1");
  o("MOVI r2, 0");
  o("BEQ r5, r2, crc_nox");
  o("XORI r3, r3, 0xEDB88320");
  o.label("crc_nox");
  o("ADDI r6, r6, 1");
  o("MOVI r2, 8");
  o("BLTU r6, r2, crc_bit");
  o("ADDI r4, r4, 1");
  o("JMP crc_byte");
  o.label("crc_done");
  o("XORI r3, r3, 0xFFFFFFFF");
  o("MOVI r5, CRC_OUT");
  o("LOAD r2, [r5+0]");
  for (int i = 0; i < 5; ++i) o("STORE [r2+" + std::to_string(4 * i) + "], r3");
  o("RET");
  o.label("measure_end");
  return o.str();
}

}  // namespace bootkeeper::fixtures

namespace bootkeeper {

std::string reference_sha1_source() {
  return "# reference SHA-1\n" + fixtures::prelude() + "\n.entry sha1\n.code\n" +
         fixtures::sha1_routines(fixtures::Sha1Style{});
}

std::string jump_table_source() {
  return R"(# three-way jump table on an uninitialized RAM word
.entry start
.code
start:
  MOVI r1, 0x00300000
  LOAD r0, [r1+0]
  MOVI r2, 3
  BGEU r0, r2, out
  SHLI r0, r0, 3
  ADDI r0, r0, table
  JMPR r0
table:
  JMP case0
  JMP case1
  JMP case2
case0:
  MOVI r3, 10
  JMP out
case1:
  MOVI r3, 20
  JMP out
case2:
  MOVI r3, 30
out:
  HALT
)";
}

std::string diamond_source() {
  return R"(# one data-dependent diamond, then a TPM write
.entry start
.code
start:
  MOVI r1, 0x00300000
  LOAD r0, [r1+0]
  MOVI r2, 5
  BEQ r0, r2, then
  MOVI r3, 1
  JMP join
then:
  MOVI r3, 2
join:
  MOVI r4, 0xFED40000
  STORE [r4+0x24], r3
  HALT
)";
}

}  // namespace bootkeeper
