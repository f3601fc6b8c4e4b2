#include "recast/metrics.h"

#include <cmath>
#include <limits>
#include <sstream>

namespace recast {

namespace {

constexpr double kPeak = 2.0;  // [-1, 1] range
constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * kPeak) * (0.01 * kPeak);
constexpr double kC2 = (0.03 * kPeak) * (0.03 * kPeak);

void check_pair(const VideoClip& a, const VideoClip& b) {
    require(a.data.shape == b.data.shape, ErrorCode::invalid_shape,
            "metrics: video shapes differ");
    require(a.data.rank() == 4, ErrorCode::invalid_shape, "metrics: expected [F,C,H,W]");
}

const std::vector<double>& gauss_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(kWin);
        double sum = 0;
        int half = kWin / 2;
        for (int i = 0; i < kWin; ++i) {
            double d = i - half;
            v[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += v[static_cast<size_t>(i)];
        }
        for (auto& x : v) x /= sum;
        return v;
    }();
    return k;
}

// separable valid-mode Gaussian filter of a H x W plane -> (H-10) x (W-10)
void gauss_valid(const std::vector<double>& img, int H, int W, std::vector<double>& out) {
    const auto& k = gauss_kernel();
    int Wv = W - kWin + 1, Hv = H - kWin + 1;
    std::vector<double> tmp(static_cast<size_t>(H) * Wv);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < Wv; ++x) {
            double acc = 0;
            for (int i = 0; i < kWin; ++i) acc += k[static_cast<size_t>(i)] * img[static_cast<size_t>(y) * W + x + i];
            tmp[static_cast<size_t>(y) * Wv + x] = acc;
        }
    out.assign(static_cast<size_t>(Hv) * Wv, 0.0);
    for (int y = 0; y < Hv; ++y)
        for (int x = 0; x < Wv; ++x) {
            double acc = 0;
            for (int i = 0; i < kWin; ++i) acc += k[static_cast<size_t>(i)] * tmp[static_cast<size_t>(y + i) * Wv + x];
            out[static_cast<size_t>(y) * Wv + x] = acc;
        }
}

}  // namespace

double mse(const VideoClip& a, const VideoClip& b, const MaskClip* region, bool invert_region) {
    check_pair(a, b);
    int F = a.frames(), C = a.channels(), H = a.height(), W = a.width();
    if (region) {
        require(region->data.shape == nn::Shape({F, 1, H, W}), ErrorCode::invalid_shape,
                "metrics: region mask shape mismatch");
    }
    double acc = 0;
    int64_t count = 0;
    for (int f = 0; f < F; ++f)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (region) {
                    bool in = region->data.at4(f, 0, y, x) != 0;
                    if (invert_region) in = !in;
                    if (!in) continue;
                }
                for (int c = 0; c < C; ++c) {
                    double d = static_cast<double>(a.data.at4(f, c, y, x)) -
                               static_cast<double>(b.data.at4(f, c, y, x));
                    acc += d * d;
                    ++count;
                }
            }
    require(count > 0, ErrorCode::invalid_region, "metrics: empty region");
    return acc / static_cast<double>(count);
}

double psnr(const VideoClip& a, const VideoClip& b, const MaskClip* region) {
    double m = mse(a, b, region);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(kPeak * kPeak / m);
}

double ssim(const VideoClip& a, const VideoClip& b) {
    check_pair(a, b);
    int F = a.frames(), C = a.channels(), H = a.height(), W = a.width();
    require(H >= kWin && W >= kWin, ErrorCode::invalid_shape,
            "ssim: frame smaller than the 11x11 window");
    int Hv = H - kWin + 1, Wv = W - kWin + 1;
    std::vector<double> pa(static_cast<size_t>(H) * W), pb(pa.size()), paa(pa.size()),
        pbb(pa.size()), pab(pa.size());
    std::vector<double> mu1, mu2, m11, m22, m12;
    double total = 0;
    for (int f = 0; f < F; ++f)
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    double va = a.data.at4(f, c, y, x);
                    double vb = b.data.at4(f, c, y, x);
                    size_t i = static_cast<size_t>(y) * W + x;
                    pa[i] = va;
                    pb[i] = vb;
                    paa[i] = va * va;
                    pbb[i] = vb * vb;
                    pab[i] = va * vb;
                }
            gauss_valid(pa, H, W, mu1);
            gauss_valid(pb, H, W, mu2);
            gauss_valid(paa, H, W, m11);
            gauss_valid(pbb, H, W, m22);
            gauss_valid(pab, H, W, m12);
            double acc = 0;
            for (int i = 0; i < Hv * Wv; ++i) {
                size_t ii = static_cast<size_t>(i);
                double s11 = m11[ii] - mu1[ii] * mu1[ii];
                double s22 = m22[ii] - mu2[ii] * mu2[ii];
                double s12 = m12[ii] - mu1[ii] * mu2[ii];
                double num = (2.0 * mu1[ii] * mu2[ii] + kC1) * (2.0 * s12 + kC2);
                double den = (mu1[ii] * mu1[ii] + mu2[ii] * mu2[ii] + kC1) * (s11 + s22 + kC2);
                acc += num / den;
            }
            total += acc / (Hv * Wv);
        }
    return total / (static_cast<double>(F) * C);
}

EvalReport evaluate(const VideoClip& generated, const VideoClip& truth, const MaskClip& mask) {
    EvalReport r;
    r.mse_full = mse(generated, truth);
    r.psnr_full = psnr(generated, truth);
    r.ssim_full = ssim(generated, truth);
    r.mse_masked = mse(generated, truth, &mask, false);
    r.mse_unmasked = mse(generated, truth, &mask, true);
    r.psnr_masked_region = r.mse_masked == 0.0 ? std::numeric_limits<double>::infinity()
                                               : 10.0 * std::log10(kPeak * kPeak / r.mse_masked);
    r.psnr_unmasked_region = r.mse_unmasked == 0.0
                                 ? std::numeric_limits<double>::infinity()
                                 : 10.0 * std::log10(kPeak * kPeak / r.mse_unmasked);
    return r;
}

EvalReport aggregate_reports(const std::vector<EvalReport>& reports) {
    require(!reports.empty(), ErrorCode::invalid_argument, "aggregate_reports: empty list");
    EvalReport agg;
    for (const auto& r : reports) {
        agg.psnr_full += r.psnr_full;
        agg.psnr_masked_region += r.psnr_masked_region;
        agg.psnr_unmasked_region += r.psnr_unmasked_region;
        agg.ssim_full += r.ssim_full;
        agg.mse_full += r.mse_full;
        agg.mse_masked += r.mse_masked;
        agg.mse_unmasked += r.mse_unmasked;
    }
    double n = static_cast<double>(reports.size());
    agg.psnr_full /= n;
    agg.psnr_masked_region /= n;
    agg.psnr_unmasked_region /= n;
    agg.ssim_full /= n;
    agg.mse_full /= n;
    agg.mse_masked /= n;
    agg.mse_unmasked /= n;
    return agg;
}

namespace {

std::string num_or_inf(double v) {
    if (std::isinf(v)) return "\"inf\"";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string eval_report_to_json(const EvalReport& r) {
    std::ostringstream os;
    os << "{\n"
       << "  \"psnr_full\": " << num_or_inf(r.psnr_full) << ",\n"
       << "  \"psnr_masked_region\": " << num_or_inf(r.psnr_masked_region) << ",\n"
       << "  \"psnr_unmasked_region\": " << num_or_inf(r.psnr_unmasked_region) << ",\n"
       << "  \"ssim_full\": " << num_or_inf(r.ssim_full) << ",\n"
       << "  \"mse_full\": " << num_or_inf(r.mse_full) << ",\n"
       << "  \"mse_masked\": " << num_or_inf(r.mse_masked) << ",\n"
       << "  \"mse_unmasked\": " << num_or_inf(r.mse_unmasked) << "\n"
       << "}\n";
    return os.str();
}

std::string eval_report_table(const EvalReport& r) {
    std::ostringstream os;
    auto row = [&](const char* name, double v) {
        os << name;
        for (size_t i = std::string(name).size(); i < 24; ++i) os << ' ';
        if (std::isinf(v))
            os << "inf\n";
        else
            os << v << "\n";
    };
    row("psnr_full (dB)", r.psnr_full);
    row("psnr_masked (dB)", r.psnr_masked_region);
    row("psnr_unmasked (dB)", r.psnr_unmasked_region);
    row("ssim_full", r.ssim_full);
    row("mse_full", r.mse_full);
    row("mse_masked", r.mse_masked);
    row("mse_unmasked", r.mse_unmasked);
    return os.str();
}

}  // namespace recast
