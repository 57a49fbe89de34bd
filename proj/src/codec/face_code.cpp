#include "codec/face_code.hpp"

#include <array>
#include <bit>

#include "codec/crc16.hpp"
#include "common/error.hpp"

namespace facekey::codec {

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
constexpr std::size_t kPayloadChars = 16;  // 80 bits: 64 payload + 16 zero pad
constexpr std::size_t kPrefixLength = 3;

int base32_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= '2' && c <= '7') return c - '2' + 26;
  return -1;
}

}  // namespace

std::uint16_t code_checksum(std::uint64_t payload) noexcept {
  std::array<std::uint8_t, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(payload >> (56 - 8 * i));
  return static_cast<std::uint16_t>(crc16_ccitt_false(bytes) >> 6);
}

std::string FaceOutputCode::render() const {
  std::string out = "FC-";
  out.reserve(kTextLength);
  // Chars 0..12 cover payload bits 63..0 (the 13th char takes the last 4 bits
  // plus one pad bit); chars 13..15 are pure padding.
  for (std::size_t c = 0; c < kPayloadChars; ++c) {
    int value = 0;
    for (int b = 0; b < 5; ++b) {
      const int bit_index = static_cast<int>(c) * 5 + b;  // 0 = payload MSB
      int bit = bit_index < 64 ? static_cast<int>((payload_ >> (63 - bit_index)) & 1) : 0;
      value = (value << 1) | bit;
    }
    out.push_back(kAlphabet[static_cast<std::size_t>(value)]);
  }
  const std::uint16_t check = code_checksum(payload_);
  out.push_back('-');
  out.push_back(kAlphabet[check >> 5]);
  out.push_back(kAlphabet[check & 31]);
  return out;
}

std::uint64_t quantize_signs(std::span<const double> weights) {
  std::uint64_t bits = 0;
  for (int i = 0; i < kQuantizationBits; ++i) {
    bits <<= 1;
    if (static_cast<std::size_t>(i) < weights.size() && weights[static_cast<std::size_t>(i)] >= 0.0) {
      bits |= 1;
    }
  }
  return bits;
}

FaceOutputCode derive_code(const faceml::Embedding& embedding, std::uint16_t seq) {
  if (embedding.weights.empty()) {
    fail(ErrorCode::EmbeddingMismatch, "embedding has no weights");
  }
  return FaceOutputCode::from_parts(quantize_signs(embedding.weights), seq);
}

FaceOutputCode parse_code(std::string_view text) {
  if (text.size() != FaceOutputCode::kTextLength || text.substr(0, kPrefixLength) != "FC-" ||
      text[kPrefixLength + kPayloadChars] != '-') {
    fail(ErrorCode::MalformedCode, "face code must look like FC-XXXXXXXXXXXXXXXX-XX");
  }
  std::uint64_t payload = 0;
  std::uint32_t pad = 0;
  for (std::size_t c = 0; c < kPayloadChars; ++c) {
    const int value = base32_value(text[kPrefixLength + c]);
    if (value < 0) fail(ErrorCode::MalformedCode, "face code contains a non-base32 character");
    for (int b = 4; b >= 0; --b) {
      const int bit_index = static_cast<int>(c) * 5 + (4 - b);
      const unsigned bit = static_cast<unsigned>(value >> b) & 1u;
      if (bit_index < 64) {
        payload = (payload << 1) | bit;
      } else {
        pad = (pad << 1) | bit;
      }
    }
  }
  const int hi = base32_value(text[kPrefixLength + kPayloadChars + 1]);
  const int lo = base32_value(text[kPrefixLength + kPayloadChars + 2]);
  if (hi < 0 || lo < 0) fail(ErrorCode::MalformedCode, "face code checksum is not base32");
  const auto check = static_cast<std::uint16_t>((hi << 5) | lo);
  if (pad != 0 || check != code_checksum(payload)) {
    fail(ErrorCode::ChecksumError, "face code checksum mismatch");
  }
  return FaceOutputCode::from_payload(payload);
}

int hamming_bits(std::uint64_t a, std::uint64_t b) noexcept {
  return std::popcount((a ^ b) & kQuantizationMask);
}

int hamming(const FaceOutputCode& a, const FaceOutputCode& b) noexcept {
  return hamming_bits(a.quantization(), b.quantization());
}

}  // namespace facekey::codec
