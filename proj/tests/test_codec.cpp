#include <doctest.h>

#include <random>

#include "codec/crc16.hpp"
#include "codec/envelope.hpp"
#include "codec/face_code.hpp"
#include "common/bytes.hpp"
#include "common/error.hpp"
#include "support/expect.hpp"

using namespace facekey;
using namespace facekey::codec;
using facekey::testing::code_of;

namespace {

// Bit-at-a-time CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
std::uint16_t crc_oracle(const std::vector<std::uint8_t>& data) {
  std::uint16_t crc = 0xFFFF;
  for (auto byte : data) {
    for (int b = 7; b >= 0; --b) {
      const bool in = (byte >> b) & 1;
      const bool top = crc & 0x8000;
      crc = static_cast<std::uint16_t>(crc << 1);
      if (in != top) crc ^= 0x1021;
    }
  }
  return crc;
}

int popcount_oracle(std::uint64_t a, std::uint64_t b) {
  int n = 0;
  for (int i = 0; i < 48; ++i) n += ((a >> i) & 1) != ((b >> i) & 1);
  return n;
}

// Decodes the 16 payload chars and the checksum by hand, validates with the oracle CRC.
bool checksum_valid(const std::string& text) {
  const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
  std::vector<int> bits;
  for (int i = 3; i < 19; ++i) {
    const auto v = alphabet.find(text[i]);
    for (int b = 4; b >= 0; --b) bits.push_back((v >> b) & 1);
  }
  std::vector<std::uint8_t> bytes(8, 0);
  for (int i = 0; i < 64; ++i) bytes[i / 8] = static_cast<std::uint8_t>(bytes[i / 8] << 1 | bits[i]);
  const int check = static_cast<int>(alphabet.find(text[20]) << 5 | alphabet.find(text[21]));
  return check == crc_oracle(bytes) >> 6;
}

std::vector<std::uint8_t> hex_bytes(std::string_view hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

Bytes key_bytes() {
  Bytes k(32);
  for (int i = 0; i < 32; ++i) k[i] = static_cast<std::uint8_t>(i);
  return k;
}

}  // namespace

TEST_SUITE("crc16") {
  TEST_CASE("check value and table agrees with bitwise oracle") {
    CHECK(crc16_ccitt_false(as_bytes("123456789")) == 0x29B1);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 500; ++t) {
      std::vector<std::uint8_t> data(rng() % 40);
      for (auto& b : data) b = static_cast<std::uint8_t>(rng());
      CHECK(crc16_ccitt_false(data) == crc_oracle(data));
    }
  }
}

TEST_SUITE("face code") {
  TEST_CASE("sign quantization: zero counts as non-negative") {
    const faceml::Embedding e{{0.5, -0.3, 0.0, 1.2}, 0.0};
    const auto c = derive_code(e, 0);
    CHECK(c.quantization() == (std::uint64_t{0b1011} << 44));
    CHECK(c.seq() == 0);
    // Golden text computed with Python's base64.b32encode and a bitwise CRC.
    CHECK(c.render() == "FC-WAAAAAAAAAAAAAAA-RJ");
    CHECK(FaceOutputCode::from_parts(kQuantizationMask, 7).render() == "FC-7777777774AAOAAA-7I");
    CHECK(FaceOutputCode::from_parts(0, 0).render() == "FC-AAAAAAAAAAAAAAAA-GE");
    CHECK(c.render().size() == FaceOutputCode::kTextLength);
  }

  TEST_CASE("seq disambiguates and only the first 48 weights count") {
    const faceml::Embedding e{{1, -1, 1}, 0};
    CHECK(derive_code(e, 1) != derive_code(e, 2));
    std::vector<double> many(60, -1.0);
    many[50] = 1.0;
    CHECK(derive_code({many, 0}, 0).quantization() == 0);
  }

  TEST_CASE("1000 random codes round-trip and validate against the oracle CRC") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0, 1);
    for (int t = 0; t < 1000; ++t) {
      std::vector<double> w(1 + rng() % 60);
      for (auto& v : w) v = g(rng);
      const auto seq = static_cast<std::uint16_t>(rng());
      const auto c = derive_code({w, 0}, seq);
      const auto text = c.render();
      CHECK(checksum_valid(text));
      const auto back = parse_code(text);
      CHECK(back == c);
      CHECK(back.seq() == seq);
      CHECK(back.render() == text);
    }
  }

  TEST_CASE("single-character mutations are caught at least 99% of the time") {
    std::mt19937_64 rng(7);
    const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
    int caught = 0;
    for (int t = 0; t < 1000; ++t) {
      auto text = FaceOutputCode::from_payload(rng()).render();
      std::size_t pos;
      do pos = 3 + rng() % 19; while (pos == 19);
      char repl;
      do repl = alphabet[rng() % 32]; while (repl == text[pos]);
      text[pos] = repl;
      try {
        parse_code(text);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ChecksumError) ++caught;
      }
    }
    CHECK(caught >= 990);
  }

  TEST_CASE("malformed codes") {
    CHECK(code_of([] { parse_code("FC-SHORT"); }) == ErrorCode::MalformedCode);
    CHECK(code_of([] { parse_code("XX-WAAAAAAAAAAAAAAA-RJ"); }) == ErrorCode::MalformedCode);
    CHECK(code_of([] { parse_code("FC-WAAAAAAAAAAAAAA1-RJ"); }) == ErrorCode::MalformedCode);
    CHECK(code_of([] { parse_code("FC-WAAAAAAAAAAAAAAAxRJ"); }) == ErrorCode::MalformedCode);
    CHECK(code_of([] { parse_code("fc-WAAAAAAAAAAAAAAA-RJ"); }) == ErrorCode::MalformedCode);
    CHECK(code_of([] { parse_code("FC-WAAAAAAAAAAAAAAA-RK"); }) == ErrorCode::ChecksumError);
    // Nonzero pad bit.
    CHECK(code_of([] { parse_code("FC-WAAAAAAAAAAAAAAB-RJ"); }) == ErrorCode::ChecksumError);
  }

  TEST_CASE("hamming over quantization bits only") {
    const auto a = FaceOutputCode::from_parts(std::uint64_t{0b1011} << 44, 3);
    const auto b = FaceOutputCode::from_parts(std::uint64_t{0b0011} << 44, 9);
    CHECK(hamming(a, a) == 0);
    CHECK(hamming(a, b) == 1);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 1000; ++t) {
      const auto x = FaceOutputCode::from_payload(rng());
      const auto y = FaceOutputCode::from_payload(rng());
      CHECK(hamming(x, y) == popcount_oracle(x.quantization(), y.quantization()));
      CHECK(hamming(x, y) == hamming(y, x));
    }
  }

  TEST_CASE("sign locality: perturbations without sign crossings keep the bits") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 1);
    std::uniform_real_distribution<double> frac(-0.99, 0.99);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> w(48), p(48);
      for (int i = 0; i < 48; ++i) {
        w[i] = g(rng);
        p[i] = w[i] + frac(rng) * std::abs(w[i]);
      }
      CHECK(quantize_signs(w) == quantize_signs(p));
    }
  }
}

TEST_SUITE("envelope") {
  TEST_CASE("golden vector from an independent AES-256-GCM implementation") {
    Nonce nonce;
    for (int i = 0; i < 16; ++i) nonce[i] = static_cast<std::uint8_t>(0xA0 + i);
    const auto sealed = seal_with_nonce(key_bytes(), nonce, as_bytes("face output code record"));
    const auto expect = hex_bytes(
        "01a0a1a2a3a4a5a6a7a8a9aaabacadaeaf170000004cc240d938a2b802b3eb6b918e7be9f5a237261a114635cd"
        "da0ddf35e71f581536a2ef11ae0ab2");
    CHECK(sealed.serialize() == expect);
    const auto plain = open_bytes(key_bytes(), expect);
    CHECK(std::string(plain.begin(), plain.end()) == "face output code record");
  }

  TEST_CASE("round trip, fresh nonces, wrong key") {
    const auto a = seal_bytes(key_bytes(), as_bytes("FC-WAAAAAAAAAAAAAAA-RJ"));
    const auto b = seal_bytes(key_bytes(), as_bytes("FC-WAAAAAAAAAAAAAAA-RJ"));
    CHECK(a != b);
    const auto p = open_bytes(key_bytes(), a);
    CHECK(std::string(p.begin(), p.end()) == "FC-WAAAAAAAAAAAAAAA-RJ");
    auto other = key_bytes();
    other[0] ^= 1;
    CHECK(code_of([&] { open_bytes(other, a); }) == ErrorCode::AuthenticationFailure);
    CHECK(open_bytes(key_bytes(), seal_bytes(key_bytes(), {})).empty());
  }

  TEST_CASE("1 MiB payload") {
    Bytes big(1 << 20);
    std::mt19937_64 rng(4);
    for (auto& b : big) b = static_cast<std::uint8_t>(rng());
    CHECK(open_bytes(key_bytes(), seal_bytes(key_bytes(), big)) == big);
  }

  TEST_CASE("every single-bit flip fails authentication") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
      Bytes plain(rng() % 64);
      for (auto& b : plain) b = static_cast<std::uint8_t>(rng());
      auto env = seal_bytes(key_bytes(), plain);
      const std::size_t bit = rng() % (env.size() * 8);
      env[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK(code_of([&] { open_bytes(key_bytes(), env); }) == ErrorCode::AuthenticationFailure);
    }
  }

  TEST_CASE("truncation, trailing bytes and key length") {
    const auto env = seal_bytes(key_bytes(), as_bytes("abc"));
    for (std::size_t n = 0; n < env.size(); ++n) {
      const Bytes cut(env.begin(), env.begin() + static_cast<long>(n));
      CHECK(code_of([&] { open_bytes(key_bytes(), cut); }) == ErrorCode::AuthenticationFailure);
    }
    auto longer = env;
    longer.push_back(0);
    CHECK(code_of([&] { open_bytes(key_bytes(), longer); }) == ErrorCode::AuthenticationFailure);
    const Bytes short_key(16, 1);
    CHECK(code_of([&] { seal_bytes(short_key, as_bytes("x")); }) == ErrorCode::KeyError);
    CHECK(code_of([&] { open_bytes(short_key, env); }) == ErrorCode::KeyError);
    CHECK(code_of([] { parse_key_hex("abc"); }) == ErrorCode::KeyError);
    CHECK(parse_key_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f") == key_bytes());
  }
}
