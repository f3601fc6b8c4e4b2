#pragma once

#include <cstdint>
#include <string>

#include "recast/nn/array.h"

namespace recast {

enum class MaskForm { precise, bbox, inflated, blended, edge_destruction };

const char* mask_form_name(MaskForm f);
MaskForm mask_form_from_name(const std::string& name);

// Normalized pixel video, [F, 3, H, W] in [-1, 1].
struct VideoClip {
    nn::Array<float> data;

    int frames() const { return data.shape[0]; }
    int channels() const { return data.shape[1]; }
    int height() const { return data.shape[2]; }
    int width() const { return data.shape[3]; }
};

// Binary per-frame masks, [F, 1, H, W], 1 = region to synthesize.
struct MaskClip {
    nn::Array<uint8_t> data;
    MaskForm form = MaskForm::precise;

    int frames() const { return data.shape[0]; }
    int height() const { return data.shape[2]; }
    int width() const { return data.shape[3]; }
};

// Per-frame 2D keypoints [F, K, 3] (x, y in [0,1], visibility) plus the
// rendered skeleton map [F, 3, H, W].
struct PoseSequence {
    nn::Array<float> keypoints;
    nn::Array<float> pose_map;

    int frames() const { return keypoints.shape[0]; }
    int joints() const { return keypoints.shape[1]; }
};

// Segmented reference image (background zeroed), its mask and pose map.
struct ReferenceBundle {
    nn::Array<float> image;         // [3, H, W]
    nn::Array<uint8_t> ref_mask;    // [1, H, W]
    nn::Array<float> ref_pose_map;  // [3, H, W]
    std::string identity_id;
};

// Latent video [F, C_z, h, w]; scale = pixel/latent downsample factor.
struct LatentClip {
    nn::Array<float> data;
    int scale = 4;

    int frames() const { return data.shape[0]; }
    int channels() const { return data.shape[1]; }
    int height() const { return data.shape[2]; }
    int width() const { return data.shape[3]; }
};

}  // namespace recast
