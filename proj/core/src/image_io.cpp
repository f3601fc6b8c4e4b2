#include "recast/image_io.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace recast {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FILE* f = std::fopen(path.string().c_str(), mode);
    require(f != nullptr, ErrorCode::io_error, "cannot open " + path.string());
    return FilePtr(f);
}

}  // namespace

nn::Array<uint8_t> read_png_rgb8(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::io_error, "failed to read PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    int W = static_cast<int>(png_get_image_width(png, info));
    int H = static_cast<int>(png_get_image_height(png, info));
    std::vector<uint8_t> row(static_cast<size_t>(W) * 3);
    nn::Array<uint8_t> out({3, H, W});
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                out.at3(c, y, x) = row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)];
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png_rgb8(const std::filesystem::path& path, const nn::Array<uint8_t>& img) {
    require(img.rank() == 3 && img.shape[0] == 3, ErrorCode::invalid_shape,
            "write_png_rgb8: expected [3,H,W]");
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::io_error, "failed to write PNG " + path.string());
    }
    int H = img.shape[1], W = img.shape[2];
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<uint8_t> row(static_cast<size_t>(W) * 3);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<size_t>(x) * 3 + static_cast<size_t>(c)] = img.at3(c, y, x);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

nn::Array<uint8_t> read_png_gray1(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::io_error, "failed to read PNG " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    int color = png_get_color_type(png, info);
    require(color == PNG_COLOR_TYPE_GRAY, ErrorCode::io_error,
            "read_png_gray1: expected grayscale PNG: " + path.string());
    int depth = png_get_bit_depth(png, info);
    if (depth < 8) png_set_packing(png);  // unpack to one byte per pixel
    png_read_update_info(png, info);

    int W = static_cast<int>(png_get_image_width(png, info));
    int H = static_cast<int>(png_get_image_height(png, info));
    std::vector<uint8_t> row(static_cast<size_t>(W));
    nn::Array<uint8_t> out({1, H, W});
    for (int y = 0; y < H; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < W; ++x) {
            uint8_t v = row[static_cast<size_t>(x)];
            out.at3(0, y, x) = depth == 1 ? (v ? 1 : 0) : (v >= 128 ? 1 : 0);
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png_gray1(const std::filesystem::path& path, const nn::Array<uint8_t>& img) {
    require(img.rank() == 3 && img.shape[0] == 1, ErrorCode::invalid_shape,
            "write_png_gray1: expected [1,H,W]");
    for (int64_t i = 0; i < img.numel(); ++i)
        require(img[i] <= 1, ErrorCode::invalid_mask, "write_png_gray1: mask must be binary");
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::io_error, "failed to write PNG " + path.string());
    }
    int H = img.shape[1], W = img.shape[2];
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 1,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_packing(png);  // pack byte-per-pixel rows into bits
    std::vector<uint8_t> row(static_cast<size_t>(W));
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) row[static_cast<size_t>(x)] = img.at3(0, y, x);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

nn::Array<uint8_t> quantize_unit_range(const nn::Array<float>& img) {
    nn::Array<uint8_t> out;
    out.shape = img.shape;
    out.data.resize(static_cast<size_t>(img.numel()));
    for (int64_t i = 0; i < img.numel(); ++i) {
        float v = (img[i] + 1.0f) * 0.5f * 255.0f;
        v = std::min(255.0f, std::max(0.0f, v));
        out[i] = static_cast<uint8_t>(std::lround(v));
    }
    return out;
}

nn::Array<float> dequantize_unit_range(const nn::Array<uint8_t>& img) {
    nn::Array<float> out;
    out.shape = img.shape;
    out.data.resize(static_cast<size_t>(img.numel()));
    for (int64_t i = 0; i < img.numel(); ++i)
        out[i] = static_cast<float>(img[i]) / 255.0f * 2.0f - 1.0f;
    return out;
}

nn::Array<float> snap_to_u8_grid(const nn::Array<float>& img) {
    return dequantize_unit_range(quantize_unit_range(img));
}

}  // namespace recast
