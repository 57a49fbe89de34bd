#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "faceml/eigenface.hpp"

namespace facekey::codec {

inline constexpr int kQuantizationBits = 48;
inline constexpr std::uint64_t kQuantizationMask = (std::uint64_t{1} << kQuantizationBits) - 1;

// The textual primary key for a human: 48 sign-quantization bits and a 16-bit
// disambiguation sequence, rendered as "FC-" + 16 base32 chars + "-" + 2
// base32 checksum chars. Payload layout: bits 63..16 quantization (first
// weight in bit 63), bits 15..0 sequence.
class FaceOutputCode {
public:
  static constexpr std::size_t kTextLength = 22;

  constexpr FaceOutputCode() = default;
  static FaceOutputCode from_payload(std::uint64_t payload) { return FaceOutputCode(payload); }
  static FaceOutputCode from_parts(std::uint64_t quantization, std::uint16_t seq) {
    return FaceOutputCode(((quantization & kQuantizationMask) << 16) | seq);
  }

  std::uint64_t payload() const noexcept { return payload_; }
  std::uint64_t quantization() const noexcept { return payload_ >> 16; }
  std::uint16_t seq() const noexcept { return static_cast<std::uint16_t>(payload_ & 0xFFFF); }

  std::string render() const;

  friend auto operator<=>(const FaceOutputCode&, const FaceOutputCode&) = default;

private:
  explicit constexpr FaceOutputCode(std::uint64_t payload) : payload_(payload) {}
  std::uint64_t payload_ = 0;
};

// Bit i (counting from the most significant of 48) is 1 when weight i >= 0.
std::uint64_t quantize_signs(std::span<const double> weights);

FaceOutputCode derive_code(const faceml::Embedding& embedding, std::uint16_t seq);

// Throws MalformedCode for length/alphabet/layout violations, ChecksumError
// when the payload does not match its checksum.
FaceOutputCode parse_code(std::string_view text);

// Hamming distance over the 48 quantization bits.
int hamming(const FaceOutputCode& a, const FaceOutputCode& b) noexcept;
int hamming_bits(std::uint64_t a, std::uint64_t b) noexcept;

// Top ten bits of CRC-16/CCITT-FALSE over the big-endian payload.
std::uint16_t code_checksum(std::uint64_t payload) noexcept;

}  // namespace facekey::codec
