#include "bootkeeper/sha1.hpp"

#include <bit>
#include <cstring>

namespace bootkeeper {

Sha1::Sha1(const RoundConstants& k) : k_(k), h_{0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u} {}

void Sha1::compress(const uint8_t* block) {
  uint32_t w[80];
  for (int t = 0; t < 16; ++t)
    w[t] = uint32_t{block[4 * t]} << 24 | uint32_t{block[4 * t + 1]} << 16 |
           uint32_t{block[4 * t + 2]} << 8 | uint32_t{block[4 * t + 3]};
  for (int t = 16; t < 80; ++t) w[t] = std::rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);

  uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
  for (int t = 0; t < 80; ++t) {
    uint32_t f, k;
    if (t < 20) {
      f = (b & c) | (~b & d);
      k = k_[0];
    } else if (t < 40) {
      f = b ^ c ^ d;
      k = k_[1];
    } else if (t < 60) {
      f = (b & c) | (b & d) | (c & d);
      k = k_[2];
    } else {
      f = b ^ c ^ d;
      k = k_[3];
    }
    uint32_t temp = std::rotl(a, 5) + f + e + k + w[t];
    e = d;
    d = c;
    c = std::rotl(b, 30);
    b = a;
    a = temp;
  }
  h_[0] += a;
  h_[1] += b;
  h_[2] += c;
  h_[3] += d;
  h_[4] += e;
}

void Sha1::update(std::span<const uint8_t> bytes) {
  total_ += bytes.size();
  size_t i = 0;
  while (i < bytes.size()) {
    size_t take = std::min(bytes.size() - i, 64 - buf_len_);
    std::memcpy(buf_.data() + buf_len_, bytes.data() + i, take);
    buf_len_ += take;
    i += take;
    if (buf_len_ == 64) {
      compress(buf_.data());
      buf_len_ = 0;
    }
  }
}

Digest Sha1::finish() {
  const uint64_t bits = total_ * 8;
  const uint8_t pad = 0x80;
  update({&pad, 1});
  const uint8_t zero = 0;
  while (buf_len_ != 56) update({&zero, 1});
  uint8_t len[8];
  for (int i = 0; i < 8; ++i) len[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
  update(len);
  Digest out;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<uint8_t>(h_[i] >> (24 - 8 * j));
  return out;
}

Digest sha1(std::span<const uint8_t> bytes) {
  Sha1 s;
  s.update(bytes);
  return s.finish();
}

Digest sha1(std::string_view text) {
  return sha1(std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

}  // namespace bootkeeper
