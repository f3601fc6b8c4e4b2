#pragma once

#include <string>
#include <vector>

#include "recast/types.h"

namespace recast {

struct EvalReport {
    double psnr_full = 0;
    double psnr_masked_region = 0;
    double psnr_unmasked_region = 0;
    double ssim_full = 0;
    double mse_full = 0;
    double mse_masked = 0;
    double mse_unmasked = 0;
};

// PSNR in dB over [-1,1] videos (peak = 2); restricted to `region` when given.
// Identical inputs give +infinity.
double psnr(const VideoClip& a, const VideoClip& b, const MaskClip* region = nullptr);

// Mean per-frame, per-channel windowed SSIM (11x11 Gaussian, sigma 1.5,
// C1=(0.01*L)^2, C2=(0.03*L)^2, L=2), valid-window mode.
double ssim(const VideoClip& a, const VideoClip& b);

double mse(const VideoClip& a, const VideoClip& b, const MaskClip* region = nullptr,
           bool invert_region = false);

EvalReport evaluate(const VideoClip& generated, const VideoClip& truth, const MaskClip& mask);

// Field-wise arithmetic mean.
EvalReport aggregate_reports(const std::vector<EvalReport>& reports);

std::string eval_report_to_json(const EvalReport& r);
std::string eval_report_table(const EvalReport& r);

}  // namespace recast
