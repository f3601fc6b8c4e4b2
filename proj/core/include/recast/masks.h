#pragma once

#include <array>
#include <utility>
#include <vector>

#include "recast/rng.h"
#include "recast/types.h"

namespace recast {

// Training-time mask sampling policy. Weights are indexed by MaskForm order:
// precise, bbox, inflated, blended, edge_destruction.
struct MaskPolicy {
    std::array<double, 5> form_weights{0.2, 0.2, 0.2, 0.2, 0.2};
    int inflate_radius_min = 1;
    int inflate_radius_max = 4;
    int blend_count_min = 1;
    int blend_count_max = 3;
    int edge_shape_count_min = 2;
    int edge_shape_count_max = 6;
    int edge_shape_radius_min = 1;
    int edge_shape_radius_max = 3;
    // Donor offsets for blended masks are drawn uniformly from
    // [-dim/blend_offset_div, dim/blend_offset_div] per axis.
    int blend_offset_div = 3;
    bool bbox_per_clip_union = false;
    uint64_t seed = 0;

    void validate() const;
};

// Identity passthrough with binary validation; tags the result precise.
MaskClip precise_mask(const nn::Array<uint8_t>& seg);

// Per-frame minimal axis-aligned rectangle covering the foreground. With
// per_clip_union, one rectangle covering all frames is used instead.
MaskClip bbox_mask(const MaskClip& precise, bool per_clip_union = false);

// Morphological dilation with a Euclidean disk of the given radius.
MaskClip inflate_mask(const MaskClip& precise, int radius);

// Union of precise with donor masks shifted by per-donor (dy, dx); shifts
// clip at the frame bounds, they do not wrap.
MaskClip blend_mask(const MaskClip& precise, const std::vector<MaskClip>& donors,
                    const std::vector<std::pair<int, int>>& offsets);

// Adds random disks centered on boundary pixels of the precise mask
// (foreground pixels 4-adjacent to background; frame borders count as
// background). Empty frames pass through.
MaskClip edge_destruction_mask(const MaskClip& precise, const MaskPolicy& policy, Rng& rng);

// Draws a form per policy weights and dispatches with parameters drawn from
// the policy ranges. Blended-form donors default to shifted copies of the
// clip's own precise mask; cross-clip donors can be supplied.
MaskClip sample_mask_form(const MaskClip& precise, const MaskPolicy& policy, Rng& rng,
                          const std::vector<MaskClip>* donors = nullptr);

// video * (1 - mask): the masked region becomes exactly 0.
VideoClip apply_mask(const VideoClip& video, const MaskClip& mask);

bool mask_is_binary(const nn::Array<uint8_t>& m);

// True if a is a per-pixel subset of b.
bool mask_subset(const MaskClip& a, const MaskClip& b);

int64_t mask_area(const MaskClip& m);

}  // namespace recast
