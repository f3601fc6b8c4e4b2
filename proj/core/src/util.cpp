#include "recast/util.h"

#include <zlib.h>

namespace recast {

uint32_t crc32_bytes(uint32_t crc, const void* data, size_t len) {
    return static_cast<uint32_t>(
        ::crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

}  // namespace recast
