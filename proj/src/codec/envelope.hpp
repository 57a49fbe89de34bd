#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace facekey::codec {

inline constexpr std::size_t kKeyLength = 32;
inline constexpr std::size_t kNonceLength = 16;
inline constexpr std::size_t kTagLength = 16;
inline constexpr std::uint8_t kEnvelopeVersion = 1;

using Nonce = std::array<std::uint8_t, kNonceLength>;

// Authenticated ciphertext. Wire layout:
//   version(1) | nonce(16) | u32le len(ciphertext) | ciphertext | tag(16)
struct SealedRecord {
  std::uint8_t version = kEnvelopeVersion;
  Nonce nonce{};
  std::vector<std::uint8_t> ciphertext;
  std::array<std::uint8_t, kTagLength> tag{};

  std::vector<std::uint8_t> serialize() const;
  // Any layout problem (short, trailing bytes, bad version) is an AuthenticationFailure.
  static SealedRecord deserialize(std::span<const std::uint8_t> bytes);
};

// AES-256-GCM with the 16-byte nonce as IV and the version byte as AAD.
// seal draws a fresh nonce from the OpenSSL CSPRNG (thread-safe).
SealedRecord seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext);
SealedRecord seal_with_nonce(std::span<const std::uint8_t> key, const Nonce& nonce,
                             std::span<const std::uint8_t> plaintext);
std::vector<std::uint8_t> open(std::span<const std::uint8_t> key, const SealedRecord& record);

// Convenience over serialized envelopes.
std::vector<std::uint8_t> seal_bytes(std::span<const std::uint8_t> key,
                                     std::span<const std::uint8_t> plaintext);
std::vector<std::uint8_t> open_bytes(std::span<const std::uint8_t> key,
                                     std::span<const std::uint8_t> envelope);

std::vector<std::uint8_t> parse_key_hex(std::string_view hex);

}  // namespace facekey::codec
