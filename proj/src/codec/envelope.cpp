#include "codec/envelope.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <memory>

#include "common/bytes.hpp"
#include "common/error.hpp"

namespace facekey::codec {

namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

void check_key(std::span<const std::uint8_t> key) {
  if (key.size() != kKeyLength) {
    fail(ErrorCode::KeyError, "seal key must be exactly 32 bytes");
  }
}

[[noreturn]] void auth_failure() {
  fail(ErrorCode::AuthenticationFailure, "sealed record failed authentication");
}

CipherCtx init_ctx(bool encrypt, std::span<const std::uint8_t> key, const Nonce& nonce) {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) fail(ErrorCode::Internal, "EVP_CIPHER_CTX_new failed");
  auto init = encrypt ? EVP_EncryptInit_ex : EVP_DecryptInit_ex;
  if (init(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(kNonceLength),
                          nullptr) != 1 ||
      init(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    fail(ErrorCode::Internal, "AES-GCM initialisation failed");
  }
  return ctx;
}

}  // namespace

std::vector<std::uint8_t> SealedRecord::serialize() const {
  ByteWriter w;
  w.u8(version);
  w.raw(nonce);
  w.blob32(ciphertext);
  w.raw(tag);
  return std::move(w).take();
}

SealedRecord SealedRecord::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::AuthenticationFailure);
  SealedRecord rec;
  rec.version = r.u8();
  auto nonce = r.raw(kNonceLength);
  std::copy(nonce.begin(), nonce.end(), rec.nonce.begin());
  rec.ciphertext = r.blob32();
  auto tag = r.raw(kTagLength);
  std::copy(tag.begin(), tag.end(), rec.tag.begin());
  if (!r.done() || rec.version != kEnvelopeVersion) auth_failure();
  return rec;
}

SealedRecord seal_with_nonce(std::span<const std::uint8_t> key, const Nonce& nonce,
                             std::span<const std::uint8_t> plaintext) {
  check_key(key);
  auto ctx = init_ctx(true, key, nonce);
  SealedRecord rec;
  rec.nonce = nonce;
  rec.ciphertext.resize(plaintext.size());
  int len = 0;
  const std::uint8_t aad = rec.version;
  if (EVP_EncryptUpdate(ctx.get(), nullptr, &len, &aad, 1) != 1 ||
      (!plaintext.empty() &&
       EVP_EncryptUpdate(ctx.get(), rec.ciphertext.data(), &len, plaintext.data(),
                         static_cast<int>(plaintext.size())) != 1) ||
      EVP_EncryptFinal_ex(ctx.get(), rec.ciphertext.data() + rec.ciphertext.size(), &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagLength),
                          rec.tag.data()) != 1) {
    fail(ErrorCode::Internal, "AES-GCM encryption failed");
  }
  return rec;
}

SealedRecord seal(std::span<const std::uint8_t> key, std::span<const std::uint8_t> plaintext) {
  check_key(key);
  Nonce nonce;
  if (RAND_bytes(nonce.data(), static_cast<int>(nonce.size())) != 1) {
    fail(ErrorCode::Internal, "CSPRNG failure while drawing nonce");
  }
  return seal_with_nonce(key, nonce, plaintext);
}

std::vector<std::uint8_t> open(std::span<const std::uint8_t> key, const SealedRecord& record) {
  check_key(key);
  if (record.version != kEnvelopeVersion) auth_failure();
  auto ctx = init_ctx(false, key, record.nonce);
  std::vector<std::uint8_t> plain(record.ciphertext.size());
  int len = 0;
  const std::uint8_t aad = record.version;
  auto tag = record.tag;
  if (EVP_DecryptUpdate(ctx.get(), nullptr, &len, &aad, 1) != 1 ||
      (!record.ciphertext.empty() &&
       EVP_DecryptUpdate(ctx.get(), plain.data(), &len, record.ciphertext.data(),
                         static_cast<int>(record.ciphertext.size())) != 1) ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagLength),
                          tag.data()) != 1) {
    auth_failure();
  }
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + plain.size(), &len) != 1) auth_failure();
  return plain;
}

std::vector<std::uint8_t> seal_bytes(std::span<const std::uint8_t> key,
                                     std::span<const std::uint8_t> plaintext) {
  return seal(key, plaintext).serialize();
}

std::vector<std::uint8_t> open_bytes(std::span<const std::uint8_t> key,
                                     std::span<const std::uint8_t> envelope) {
  check_key(key);
  return open(key, SealedRecord::deserialize(envelope));
}

std::vector<std::uint8_t> parse_key_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() != 2 * kKeyLength) fail(ErrorCode::KeyError, "seal key must be 64 hex digits");
  std::vector<std::uint8_t> key(kKeyLength);
  for (std::size_t i = 0; i < kKeyLength; ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) fail(ErrorCode::KeyError, "seal key contains a non-hex digit");
    key[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return key;
}

}  // namespace facekey::codec
