#include <filesystem>

#include "doctest.h"
#include "recast/image_io.h"
#include "recast/rng.h"

using namespace recast;
using nn::Array;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto p = fs::temp_directory_path() / "recast_io_test";
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("rgb8 png round trip") {
    Rng rng(3);
    Array<uint8_t> img({3, 17, 23});
    for (int64_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<uint8_t>(rng.uniform_int(256));
    auto path = temp_dir() / "rt_rgb.png";
    write_png_rgb8(path, img);
    auto back = read_png_rgb8(path);
    CHECK(back.shape == img.shape);
    CHECK(back.data == img.data);
}

TEST_CASE("gray1 png round trip") {
    Rng rng(4);
    Array<uint8_t> m({1, 19, 13});
    for (int64_t i = 0; i < m.numel(); ++i) m[i] = rng.bernoulli(0.3) ? 1 : 0;
    auto path = temp_dir() / "rt_gray1.png";
    write_png_gray1(path, m);
    auto back = read_png_gray1(path);
    CHECK(back.shape == m.shape);
    CHECK(back.data == m.data);
}

TEST_CASE("quantization round trip stability") {
    Rng rng(5);
    Array<float> img({3, 8, 8});
    for (int64_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    auto snapped = snap_to_u8_grid(img);
    // snapping is idempotent
    auto twice = snap_to_u8_grid(snapped);
    CHECK(snapped.data == twice.data);
    // within half a quantization step of the original
    for (int64_t i = 0; i < img.numel(); ++i)
        CHECK(std::abs(snapped[i] - img[i]) <= 1.01f / 255.0f);
}

TEST_CASE("missing file raises io-error") {
    CHECK_THROWS_AS(read_png_rgb8(temp_dir() / "does_not_exist.png"), Error);
}

TEST_CASE("rng determinism and serialization") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    auto state = a.serialize();
    Rng c;
    c.deserialize(state);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == c.normal());

    // derived streams differ from each other
    CHECK(Rng::derive_seed(1, 0) != Rng::derive_seed(1, 1));
    CHECK(Rng::derive_seed(1, 0) != Rng::derive_seed(2, 0));
}
