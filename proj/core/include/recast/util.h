#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace recast {

// CRC-32 (zlib polynomial), streamable: pass the previous value to chain.
uint32_t crc32_bytes(uint32_t crc, const void* data, size_t len);

inline uint32_t crc32_str(uint32_t crc, const std::string& s) {
    return crc32_bytes(crc, s.data(), s.size());
}

}  // namespace recast
