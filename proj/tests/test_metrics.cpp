#include <cmath>

#include "doctest.h"
#include "recast/metrics.h"
#include "recast/rng.h"

using namespace recast;
using nn::Array;

namespace {

VideoClip random_video(Rng& rng, int F, int H, int W, double lo = -1, double hi = 1) {
    VideoClip v;
    v.data = Array<float>({F, 3, H, W});
    for (int64_t i = 0; i < v.data.numel(); ++i)
        v.data[i] = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

MaskClip random_region(Rng& rng, int F, int H, int W, double p) {
    MaskClip m;
    m.data = Array<uint8_t>({F, 1, H, W});
    for (int64_t i = 0; i < m.data.numel(); ++i) m.data[i] = rng.bernoulli(p) ? 1 : 0;
    return m;
}

// direct-formula SSIM oracle on a single channel plane pair (valid windows)
double ssim_plane_oracle(const Array<float>& a, const Array<float>& b, int f, int c, int H,
                         int W) {
    const int win = 11;
    const double sigma = 1.5;
    // L=2 -> C1=(0.01*2)^2, C2=(0.03*2)^2
    const double c1 = 0.02 * 0.02, c2 = 0.06 * 0.06;
    std::vector<double> k(win);
    double ks = 0;
    for (int i = 0; i < win; ++i) {
        double d = i - win / 2;
        k[static_cast<size_t>(i)] = std::exp(-d * d / (2 * sigma * sigma));
        ks += k[static_cast<size_t>(i)];
    }
    for (auto& v : k) v /= ks;
    double total = 0;
    int count = 0;
    for (int y = 0; y + win <= H; ++y)
        for (int x = 0; x + win <= W; ++x) {
            double mu1 = 0, mu2 = 0, m11 = 0, m22 = 0, m12 = 0;
            for (int dy = 0; dy < win; ++dy)
                for (int dx = 0; dx < win; ++dx) {
                    double wgt = k[static_cast<size_t>(dy)] * k[static_cast<size_t>(dx)];
                    double va = a.at4(f, c, y + dy, x + dx);
                    double vb = b.at4(f, c, y + dy, x + dx);
                    mu1 += wgt * va;
                    mu2 += wgt * vb;
                    m11 += wgt * va * va;
                    m22 += wgt * vb * vb;
                    m12 += wgt * va * vb;
                }
            double s11 = m11 - mu1 * mu1, s22 = m22 - mu2 * mu2, s12 = m12 - mu1 * mu2;
            total += ((2 * mu1 * mu2 + c1) * (2 * s12 + c2)) /
                     ((mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2));
            ++count;
        }
    return total / count;
}

}  // namespace

TEST_CASE("psnr basics") {
    Rng rng(1);
    auto a = random_video(rng, 2, 16, 16);

    SUBCASE("identical videos are infinite") {
        CHECK(std::isinf(psnr(a, a)));
    }

    SUBCASE("known MSE gives the textbook value") {
        VideoClip b = a;
        for (int64_t i = 0; i < b.data.numel(); ++i) b.data[i] += 0.2f;
        // MSE 0.04 over peak 2 -> 10*log10(4/0.04) = 20 dB
        CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-5));
    }

    SUBCASE("region-weighted equals brute-force over extracted pixels") {
        auto b = random_video(rng, 2, 16, 16);
        auto region = random_region(rng, 2, 16, 16, 0.3);
        double m = 0;
        int64_t n = 0;
        for (int f = 0; f < 2; ++f)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    if (region.data.at4(f, 0, y, x))
                        for (int c = 0; c < 3; ++c) {
                            double d = a.data.at4(f, c, y, x) - b.data.at4(f, c, y, x);
                            m += d * d;
                            ++n;
                        }
        m /= static_cast<double>(n);
        CHECK(psnr(a, b, &region) == doctest::Approx(10.0 * std::log10(4.0 / m)).epsilon(1e-12));
    }

    SUBCASE("empty region rejected") {
        MaskClip empty;
        empty.data = Array<uint8_t>({2, 1, 16, 16});
        CHECK_THROWS_AS(psnr(a, a, &empty), Error);
    }

    SUBCASE("symmetry") {
        auto b = random_video(rng, 2, 16, 16);
        CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("ssim basics") {
    Rng rng(7);
    auto a = random_video(rng, 2, 16, 16);

    SUBCASE("identical videos give 1") {
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("negated zero-mean patches score negative") {
        VideoClip za = a;
        // zero-mean, roughly unit-variance noise
        Rng r2(8);
        for (int64_t i = 0; i < za.data.numel(); ++i)
            za.data[i] = static_cast<float>(r2.normal());
        VideoClip zb = za;
        for (int64_t i = 0; i < zb.data.numel(); ++i) zb.data[i] = -zb.data[i];
        CHECK(ssim(za, zb) < 0.0);
    }

    SUBCASE("matches the direct-formula oracle on random 16x16 patches") {
        auto b = random_video(rng, 2, 16, 16);
        double oracle = 0;
        for (int f = 0; f < 2; ++f)
            for (int c = 0; c < 3; ++c) oracle += ssim_plane_oracle(a.data, b.data, f, c, 16, 16);
        oracle /= 6.0;
        CHECK(ssim(a, b) == doctest::Approx(oracle).epsilon(1e-6));
    }

    SUBCASE("frame smaller than the window rejected") {
        auto tiny = random_video(rng, 1, 8, 8);
        CHECK_THROWS_AS(ssim(tiny, tiny), Error);
    }

    SUBCASE("symmetry and frame-permutation invariance") {
        auto b = random_video(rng, 3, 16, 16);
        auto a3 = random_video(rng, 3, 16, 16);
        CHECK(ssim(a3, b) == doctest::Approx(ssim(b, a3)).epsilon(1e-12));
        // permute frames of both identically
        VideoClip ap = a3, bp = b;
        for (int f = 0; f < 3; ++f) {
            int src = (f + 1) % 3;
            std::copy_n(a3.data.ptr() + src * 3 * 256, 3 * 256, ap.data.ptr() + f * 3 * 256);
            std::copy_n(b.data.ptr() + src * 3 * 256, 3 * 256, bp.data.ptr() + f * 3 * 256);
        }
        CHECK(ssim(ap, bp) == doctest::Approx(ssim(a3, b)).epsilon(1e-12));
    }
}

TEST_CASE("evaluate report") {
    Rng rng(21);
    auto truth = random_video(rng, 2, 16, 16);
    auto mask = random_region(rng, 2, 16, 16, 0.25);

    SUBCASE("perfect generation") {
        auto r = evaluate(truth, truth, mask);
        CHECK(std::isinf(r.psnr_full));
        CHECK(r.ssim_full == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.mse_masked == 0.0);
        CHECK(r.mse_unmasked == 0.0);
    }

    SUBCASE("error only inside the mask splits cleanly") {
        VideoClip gen = truth;
        for (int f = 0; f < 2; ++f)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    if (mask.data.at4(f, 0, y, x))
                        for (int c = 0; c < 3; ++c) gen.data.at4(f, c, y, x) += 0.5f;
        auto r = evaluate(gen, truth, mask);
        CHECK(r.mse_unmasked == 0.0);
        CHECK(r.mse_masked > 0.0);
        CHECK(std::isinf(r.psnr_unmasked_region));
    }

    SUBCASE("area-weighted region MSEs recombine to the full MSE") {
        auto gen = random_video(rng, 2, 16, 16);
        auto r = evaluate(gen, truth, mask);
        int64_t am = 0;
        for (int64_t i = 0; i < mask.data.numel(); ++i) am += mask.data[i];
        int64_t total = mask.data.numel();
        double combined = (r.mse_masked * am + r.mse_unmasked * (total - am)) / total;
        CHECK(combined == doctest::Approx(r.mse_full).epsilon(1e-9));
    }

    SUBCASE("aggregate equals the mean of per-clip reports") {
        auto g1 = random_video(rng, 2, 16, 16);
        auto g2 = random_video(rng, 2, 16, 16);
        auto r1 = evaluate(g1, truth, mask);
        auto r2 = evaluate(g2, truth, mask);
        auto agg = aggregate_reports({r1, r2});
        CHECK(agg.mse_full == doctest::Approx((r1.mse_full + r2.mse_full) / 2).epsilon(1e-12));
        CHECK(agg.ssim_full == doctest::Approx((r1.ssim_full + r2.ssim_full) / 2).epsilon(1e-12));
    }

    SUBCASE("json serialization is stable") {
        auto gen = random_video(rng, 2, 16, 16);
        auto r = evaluate(gen, truth, mask);
        CHECK(eval_report_to_json(r) == eval_report_to_json(r));
        CHECK(eval_report_to_json(r).find("psnr_full") != std::string::npos);
    }
}
