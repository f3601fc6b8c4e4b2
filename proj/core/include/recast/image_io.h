#pragma once

#include <filesystem>
#include <string>

#include "recast/nn/array.h"

namespace recast {

// 8-bit RGB PNG <-> [3, H, W] array with values 0..255.
nn::Array<uint8_t> read_png_rgb8(const std::filesystem::path& path);
void write_png_rgb8(const std::filesystem::path& path, const nn::Array<uint8_t>& img);

// 1-bit grayscale PNG <-> [1, H, W] array with values {0, 1}.
// Reading also accepts 8-bit grayscale (threshold at 128).
nn::Array<uint8_t> read_png_gray1(const std::filesystem::path& path);
void write_png_gray1(const std::filesystem::path& path, const nn::Array<uint8_t>& img);

// [-1, 1] float image <-> 0..255 bytes, shape preserved.
nn::Array<uint8_t> quantize_unit_range(const nn::Array<float>& img);
nn::Array<float> dequantize_unit_range(const nn::Array<uint8_t>& img);

// Quantize-dequantize round trip, applied when synthesizing clips so the
// in-memory pixels match what PNG storage will reproduce.
nn::Array<float> snap_to_u8_grid(const nn::Array<float>& img);

}  // namespace recast
