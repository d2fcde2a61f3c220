#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace bootkeeper {

using Digest = std::array<uint8_t, 20>;

// Streaming SHA-1 (FIPS 180-1).
class Sha1 {
 public:
  using RoundConstants = std::array<uint32_t, 4>;
  static constexpr RoundConstants kStandard = {0x5A827999u, 0x6ED9EBA1u, 0x8F1BBCDCu, 0xCA62C1D6u};

  // Non-standard constants give the tampered variants used by test fixtures.
  explicit Sha1(const RoundConstants& k = kStandard);
  void update(std::span<const uint8_t> bytes);
  Digest finish();

 private:
  void compress(const uint8_t* block);

  RoundConstants k_;
  std::array<uint32_t, 5> h_;
  std::array<uint8_t, 64> buf_{};
  size_t buf_len_ = 0;
  uint64_t total_ = 0;
};

Digest sha1(std::span<const uint8_t> bytes);
Digest sha1(std::string_view text);

std::string to_hex(std::span<const uint8_t> bytes);

}  // namespace bootkeeper
