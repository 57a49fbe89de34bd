#pragma once

#include <cstdint>
#include <span>

namespace facekey::codec {

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) noexcept;

}  // namespace facekey::codec
