#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recast/rng.h"
#include "recast/types.h"

namespace recast::synth {

struct Vec2 {
    float x = 0, y = 0;
};

inline constexpr int kJoints = 13;
// joint order: pelvis, neck, head, l_shoulder, l_elbow, l_wrist,
//              r_shoulder, r_elbow, r_wrist, l_knee, l_ankle, r_knee, r_ankle
enum Joint {
    kPelvis = 0,
    kNeck,
    kHead,
    kLShoulder,
    kLElbow,
    kLWrist,
    kRShoulder,
    kRElbow,
    kRWrist,
    kLKnee,
    kLAnkle,
    kRKnee,
    kRAnkle,
};

inline constexpr int kBones = 12;
extern const std::array<std::pair<int, int>, kBones> kBonePairs;

struct Color {
    float r = 0, g = 0, b = 0;  // [0,1]
};

// Stick-figure body: capsule limbs over 13 joints, disk head.
struct IdentitySpec {
    std::string identity_id;
    int size = 0;  // pixel frame size the lengths are scaled for
    float torso_len = 0, head_len = 0, head_radius = 0;
    float shoulder_halfwidth = 0;
    float upper_arm_len = 0, forearm_len = 0;
    float thigh_len = 0, shin_len = 0;
    float limb_radius = 0;
    // torso, head, left arm, right arm, left leg, right leg
    std::array<Color, 6> part_colors{};
};

// Joint-angle trajectories plus root path and background parameters.
struct MotionSpec {
    int size = 0, frames = 0;
    std::vector<Vec2> root;           // [F] pelvis position, pixels
    std::vector<float> torso_sway;    // [F] radians
    std::vector<float> arm_swing_l, arm_bend_l, arm_swing_r, arm_bend_r;
    std::vector<float> leg_swing_l, leg_bend_l, leg_swing_r, leg_bend_r;
    int scroll_vx = 0, scroll_vy = 0;  // background scroll, pixels/frame
    uint64_t texture_seed = 0;
};

IdentitySpec make_identity(Rng& rng, int size);
MotionSpec make_motion(Rng& rng, int frames, int size);

std::array<Vec2, kJoints> joint_positions(const IdentitySpec& id, const MotionSpec& motion,
                                          int frame);
// Upright T-pose centered in the frame.
std::array<Vec2, kJoints> canonical_pose_joints(const IdentitySpec& id);

// Skeleton rendered as colored capsules on black, [3, S, S].
nn::Array<float> render_pose_map(const std::array<Vec2, kJoints>& joints, int size);

struct RenderedClip {
    VideoClip video;    // snapped to the 8-bit storage grid
    MaskClip mask;      // exact silhouette
    PoseSequence pose;  // exact joint positions + rendered maps
};

// Procedural background: band-limited sinusoid mixture translated by the
// scroll velocity; a pure function of (channel, x, y, frame).
float background_value(const MotionSpec& motion, int channel, float x, float y, int frame);

RenderedClip render_clip(const IdentitySpec& id, const MotionSpec& motion);

// Same figure over a caller-supplied background (used by oracles and by
// reference rendering, which uses a zero background).
RenderedClip render_clip_over(const IdentitySpec& id, const MotionSpec& motion,
                              const std::function<float(int c, int y, int x, int t)>& background);

// Background-only render of the clip described by `motion` (no figure).
VideoClip render_background_clip(const MotionSpec& motion);

ReferenceBundle make_reference(const IdentitySpec& id);

// Ground-truth character swap: identityB re-rendered with clipA's motion over
// clipA's exact background.
VideoClip replacement_oracle(const MotionSpec& motion_a, const IdentitySpec& identity_b);

// ---- on-disk dataset ----

struct ClipRecord {
    std::string clip_id;
    std::filesystem::path dir;
    VideoClip video;
    MaskClip precise;
    PoseSequence pose;
    IdentitySpec identity;
    MotionSpec motion;
};

struct ManifestEntry {
    std::string clip_id;
    std::string identity_id;
    uint64_t seed = 0;
};

struct DatasetManifest {
    uint64_t seed = 0;
    int size = 0, frames = 0;
    std::vector<ManifestEntry> clips;
};

DatasetManifest make_dataset(int n_clips, uint64_t seed, const std::filesystem::path& out_dir,
                             int size, int frames);

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);
ClipRecord load_clip(const std::filesystem::path& clip_dir);
void write_clip(const std::filesystem::path& clip_dir, const RenderedClip& clip,
                const IdentitySpec& id, const MotionSpec& motion, uint64_t seed);

// Pose map re-rendered from stored keypoints (deterministic loader path).
PoseSequence pose_from_keypoints(const nn::Array<float>& keypoints, int size);

}  // namespace recast::synth
