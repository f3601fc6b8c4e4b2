#include "recast/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "recast/image_io.h"
#include "recast/masks.h"

namespace recast::synth {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::array<std::pair<int, int>, kBones> kBonePairs = {{
    {kPelvis, kNeck},
    {kNeck, kHead},
    {kNeck, kLShoulder},
    {kLShoulder, kLElbow},
    {kLElbow, kLWrist},
    {kNeck, kRShoulder},
    {kRShoulder, kRElbow},
    {kRElbow, kRWrist},
    {kPelvis, kLKnee},
    {kLKnee, kLAnkle},
    {kPelvis, kRKnee},
    {kRKnee, kRAnkle},
}};

namespace {

// Identity sampling ranges as fractions of the frame size. The worst-case
// reach derived from these bounds caps the root amplitude in make_motion so
// every (identity, motion) pair stays >= 2 px inside the frame.
constexpr float kTorsoMin = 0.18f, kTorsoMax = 0.24f;
constexpr float kHeadLenMin = 0.06f, kHeadLenMax = 0.08f;
constexpr float kHeadRadMin = 0.04f, kHeadRadMax = 0.055f;
constexpr float kShoulderMin = 0.07f, kShoulderMax = 0.09f;
constexpr float kUpperArmMin = 0.08f, kUpperArmMax = 0.11f;
constexpr float kForearmMin = 0.08f, kForearmMax = 0.10f;
constexpr float kThighMin = 0.10f, kThighMax = 0.13f;
constexpr float kShinMin = 0.09f, kShinMax = 0.12f;
constexpr float kLimbRadMin = 0.025f, kLimbRadMax = 0.04f;

// vertical placement of the pelvis (up-reach exceeds down-reach)
constexpr float kRootY = 0.54f;
// head center sits head_len + head_radius above the neck, the disk adds one more radius
constexpr float kReachUpMax = kTorsoMax + kHeadLenMax + 2.0f * kHeadRadMax;
constexpr float kReachDownMax = kThighMax + kShinMax + kLimbRadMax;
constexpr float kReachSideMax = kShoulderMax + kUpperArmMax + kForearmMax + kLimbRadMax;

constexpr float kMarginPx = 2.0f;  // analytic margin; the contract is >= 2 px

constexpr float kMaxArmSwing = 0.6f;   // radians around straight down
constexpr float kMaxLegSwing = 0.45f;

float frand(Rng& rng, float lo, float hi) { return static_cast<float>(rng.uniform(lo, hi)); }

struct Capsule {
    Vec2 a, b;
    float radius;
    Color color;
};

float dist_sq_to_segment(float px, float py, const Vec2& a, const Vec2& b) {
    float vx = b.x - a.x, vy = b.y - a.y;
    float wx = px - a.x, wy = py - a.y;
    float vv = vx * vx + vy * vy;
    float t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0f;
    t = std::clamp(t, 0.0f, 1.0f);
    float dx = wx - t * vx, dy = wy - t * vy;
    return dx * dx + dy * dy;
}

// Figure capsules in draw order (later entries draw on top).
std::vector<Capsule> figure_capsules(const IdentitySpec& id,
                                     const std::array<Vec2, kJoints>& j) {
    std::vector<Capsule> caps;
    auto add = [&](int a, int b, float r, const Color& c) {
        caps.push_back({j[static_cast<size_t>(a)], j[static_cast<size_t>(b)], r, c});
    };
    const auto& pc = id.part_colors;
    add(kPelvis, kLKnee, id.limb_radius, pc[4]);
    add(kLKnee, kLAnkle, id.limb_radius, pc[4]);
    add(kPelvis, kRKnee, id.limb_radius, pc[5]);
    add(kRKnee, kRAnkle, id.limb_radius, pc[5]);
    add(kPelvis, kNeck, id.limb_radius * 1.6f, pc[0]);
    add(kNeck, kLShoulder, id.limb_radius, pc[2]);
    add(kLShoulder, kLElbow, id.limb_radius, pc[2]);
    add(kLElbow, kLWrist, id.limb_radius, pc[2]);
    add(kNeck, kRShoulder, id.limb_radius, pc[3]);
    add(kRShoulder, kRElbow, id.limb_radius, pc[3]);
    add(kRElbow, kRWrist, id.limb_radius, pc[3]);
    // head as a zero-length capsule (disk)
    caps.push_back({j[kHead], j[kHead], id.head_radius, pc[1]});
    return caps;
}

Vec2 polar(const Vec2& from, float len, float angle) {
    return {from.x + len * std::cos(angle), from.y + len * std::sin(angle)};
}

struct TextureParams {
    // three sinusoids; integer wave vectors, per-channel phases/amplitudes
    std::array<float, 3> kx{}, ky{};
    std::array<std::array<float, 3>, 3> amp{};    // [channel][wave]
    std::array<std::array<float, 3>, 3> phase{};  // [channel][wave]
};

TextureParams texture_params(uint64_t seed) {
    Rng rng(seed);
    TextureParams tp;
    for (int w = 0; w < 3; ++w) {
        int kx = 0, ky = 0;
        while (kx == 0 && ky == 0) {
            kx = static_cast<int>(rng.uniform_int(-3, 3));
            ky = static_cast<int>(rng.uniform_int(-3, 3));
        }
        tp.kx[static_cast<size_t>(w)] = static_cast<float>(kx);
        tp.ky[static_cast<size_t>(w)] = static_cast<float>(ky);
    }
    for (int c = 0; c < 3; ++c) {
        float total = frand(rng, 0.35f, 0.6f);
        std::array<float, 3> raw{};
        float sum = 0;
        for (int w = 0; w < 3; ++w) {
            raw[static_cast<size_t>(w)] = frand(rng, 0.2f, 1.0f);
            sum += raw[static_cast<size_t>(w)];
        }
        for (int w = 0; w < 3; ++w) {
            tp.amp[static_cast<size_t>(c)][static_cast<size_t>(w)] =
                raw[static_cast<size_t>(w)] / sum * total;
            tp.phase[static_cast<size_t>(c)][static_cast<size_t>(w)] =
                frand(rng, 0.0f, 2.0f * static_cast<float>(M_PI));
        }
    }
    return tp;
}

}  // namespace

IdentitySpec make_identity(Rng& rng, int size) {
    require(size >= 16, ErrorCode::invalid_argument, "make_identity: size too small");
    IdentitySpec id;
    float S = static_cast<float>(size);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "id-%016llx",
                  static_cast<unsigned long long>(rng.next_u64()));
    id.identity_id = buf;
    id.size = size;
    id.torso_len = frand(rng, kTorsoMin, kTorsoMax) * S;
    id.head_len = frand(rng, kHeadLenMin, kHeadLenMax) * S;
    id.head_radius = frand(rng, kHeadRadMin, kHeadRadMax) * S;
    id.shoulder_halfwidth = frand(rng, kShoulderMin, kShoulderMax) * S;
    id.upper_arm_len = frand(rng, kUpperArmMin, kUpperArmMax) * S;
    id.forearm_len = frand(rng, kForearmMin, kForearmMax) * S;
    id.thigh_len = frand(rng, kThighMin, kThighMax) * S;
    id.shin_len = frand(rng, kShinMin, kShinMax) * S;
    id.limb_radius = frand(rng, kLimbRadMin, kLimbRadMax) * S;
    for (auto& c : id.part_colors)
        c = {frand(rng, 0.0f, 1.0f), frand(rng, 0.0f, 1.0f), frand(rng, 0.0f, 1.0f)};
    return id;
}

MotionSpec make_motion(Rng& rng, int frames, int size) {
    require(frames >= 2, ErrorCode::invalid_argument, "make_motion: need at least 2 frames");
    MotionSpec m;
    m.size = size;
    m.frames = frames;
    float S = static_cast<float>(size);

    // worst-case identity reach caps the root wander
    float ax_max = std::max(0.0f, 0.5f * S - kReachSideMax * S - kMarginPx);
    float ay_up = std::max(0.0f, kRootY * S - kReachUpMax * S - kMarginPx);
    float ay_down = std::max(0.0f, (1.0f - kRootY) * S - kReachDownMax * S - kMarginPx);
    float ay_max = std::min(ay_up, ay_down);

    float ax = frand(rng, 0.0f, ax_max);
    float ay = frand(rng, 0.0f, ay_max);
    float fx = static_cast<float>(rng.uniform_int(1, 2));
    float fy = static_cast<float>(rng.uniform_int(1, 2));
    float px = frand(rng, 0.0f, 2.0f * static_cast<float>(M_PI));
    float py = frand(rng, 0.0f, 2.0f * static_cast<float>(M_PI));

    auto osc = [&](float amp_lo, float amp_hi) {
        float amp = frand(rng, amp_lo, amp_hi);
        float f = static_cast<float>(rng.uniform_int(1, 2));
        float ph = frand(rng, 0.0f, 2.0f * static_cast<float>(M_PI));
        std::vector<float> out(static_cast<size_t>(frames));
        for (int t = 0; t < frames; ++t)
            out[static_cast<size_t>(t)] =
                amp * std::sin(2.0f * static_cast<float>(M_PI) * f * t / frames + ph);
        return out;
    };

    m.root.resize(static_cast<size_t>(frames));
    for (int t = 0; t < frames; ++t) {
        float cx = 0.5f * S + ax * std::sin(2.0f * static_cast<float>(M_PI) * fx * t / frames + px);
        float cy = kRootY * S + ay * std::sin(2.0f * static_cast<float>(M_PI) * fy * t / frames + py);
        m.root[static_cast<size_t>(t)] = {cx, cy};
    }
    m.torso_sway = osc(0.02f, 0.08f);
    m.arm_swing_l = osc(0.15f, kMaxArmSwing);
    m.arm_bend_l = osc(0.1f, 0.5f);
    m.arm_swing_r = osc(0.15f, kMaxArmSwing);
    m.arm_bend_r = osc(0.1f, 0.5f);
    m.leg_swing_l = osc(0.1f, kMaxLegSwing);
    m.leg_bend_l = osc(0.05f, 0.35f);
    m.leg_swing_r = osc(0.1f, kMaxLegSwing);
    m.leg_bend_r = osc(0.05f, 0.35f);
    m.scroll_vx = static_cast<int>(rng.uniform_int(-2, 2));
    m.scroll_vy = static_cast<int>(rng.uniform_int(-2, 2));
    m.texture_seed = rng.next_u64();
    return m;
}

std::array<Vec2, kJoints> joint_positions(const IdentitySpec& id, const MotionSpec& motion,
                                          int frame) {
    const float kPi = static_cast<float>(M_PI);
    const float up = -kPi / 2.0f;    // -y is up in image coordinates
    const float down = kPi / 2.0f;
    size_t t = static_cast<size_t>(frame);

    std::array<Vec2, kJoints> j{};
    j[kPelvis] = motion.root[t];
    float torso_dir = up + motion.torso_sway[t];
    j[kNeck] = polar(j[kPelvis], id.torso_len, torso_dir);
    j[kHead] = polar(j[kNeck], id.head_len + id.head_radius, torso_dir);
    j[kLShoulder] = polar(j[kNeck], id.shoulder_halfwidth, torso_dir - kPi / 2.0f);
    j[kRShoulder] = polar(j[kNeck], id.shoulder_halfwidth, torso_dir + kPi / 2.0f);

    float arm_l = down + motion.arm_swing_l[t];
    j[kLElbow] = polar(j[kLShoulder], id.upper_arm_len, arm_l);
    j[kLWrist] = polar(j[kLElbow], id.forearm_len, arm_l + motion.arm_bend_l[t]);
    float arm_r = down + motion.arm_swing_r[t];
    j[kRElbow] = polar(j[kRShoulder], id.upper_arm_len, arm_r);
    j[kRWrist] = polar(j[kRElbow], id.forearm_len, arm_r + motion.arm_bend_r[t]);

    float leg_l = down + motion.leg_swing_l[t];
    j[kLKnee] = polar(j[kPelvis], id.thigh_len, leg_l);
    j[kLAnkle] = polar(j[kLKnee], id.shin_len, leg_l + motion.leg_bend_l[t]);
    float leg_r = down + motion.leg_swing_r[t];
    j[kRKnee] = polar(j[kPelvis], id.thigh_len, leg_r);
    j[kRAnkle] = polar(j[kRKnee], id.shin_len, leg_r + motion.leg_bend_r[t]);
    return j;
}

std::array<Vec2, kJoints> canonical_pose_joints(const IdentitySpec& id) {
    // upright T-pose: arms straight out, legs slightly apart
    MotionSpec m;
    m.size = id.size;
    m.frames = 1;
    m.root = {{0.5f * id.size, 0.5f * id.size}};
    m.torso_sway = {0.0f};
    const float kPi = static_cast<float>(M_PI);
    m.arm_swing_l = {-kPi / 2.0f};  // horizontal (left)
    m.arm_bend_l = {0.0f};
    m.arm_swing_r = {kPi / 2.0f};   // horizontal (right)
    m.arm_bend_r = {0.0f};
    m.leg_swing_l = {-0.18f};
    m.leg_bend_l = {0.0f};
    m.leg_swing_r = {0.18f};
    m.leg_bend_r = {0.0f};
    auto j = joint_positions(id, m, 0);
    // T-pose arms: wrists outward along the shoulder line
    j[kLElbow] = polar(j[kLShoulder], id.upper_arm_len, kPi);
    j[kLWrist] = polar(j[kLElbow], id.forearm_len, kPi);
    j[kRElbow] = polar(j[kRShoulder], id.upper_arm_len, 0.0f);
    j[kRWrist] = polar(j[kRElbow], id.forearm_len, 0.0f);
    return j;
}

float background_value(const MotionSpec& motion, int channel, float x, float y, int frame) {
    static thread_local uint64_t cached_seed = ~0ULL;
    static thread_local TextureParams cached;
    if (cached_seed != motion.texture_seed) {
        cached = texture_params(motion.texture_seed);
        cached_seed = motion.texture_seed;
    }
    float S = static_cast<float>(motion.size);
    float xx = x + static_cast<float>(motion.scroll_vx * frame);
    float yy = y + static_cast<float>(motion.scroll_vy * frame);
    float v = 0.0f;
    size_t c = static_cast<size_t>(channel);
    for (size_t w = 0; w < 3; ++w) {
        v += cached.amp[c][w] *
             std::sin(2.0f * static_cast<float>(M_PI) * (cached.kx[w] * xx + cached.ky[w] * yy) / S +
                      cached.phase[c][w]);
    }
    return v;
}

RenderedClip render_clip_over(const IdentitySpec& id, const MotionSpec& motion,
                              const std::function<float(int c, int y, int x, int t)>& background) {
    int S = motion.size, F = motion.frames;
    RenderedClip out;
    out.video.data = nn::Array<float>({F, 3, S, S});
    out.mask.data = nn::Array<uint8_t>({F, 1, S, S});
    out.mask.form = MaskForm::precise;
    out.pose.keypoints = nn::Array<float>({F, kJoints, 3});
    out.pose.pose_map = nn::Array<float>({F, 3, S, S});

    for (int t = 0; t < F; ++t) {
        auto joints = joint_positions(id, motion, t);
        auto caps = figure_capsules(id, joints);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                float px = x + 0.5f, py = y + 0.5f;
                int hit = -1;
                for (int ci = static_cast<int>(caps.size()) - 1; ci >= 0; --ci) {
                    const auto& cap = caps[static_cast<size_t>(ci)];
                    if (dist_sq_to_segment(px, py, cap.a, cap.b) <= cap.radius * cap.radius) {
                        hit = ci;
                        break;  // topmost capsule wins
                    }
                }
                if (hit >= 0) {
                    const Color& c = caps[static_cast<size_t>(hit)].color;
                    out.video.data.at4(t, 0, y, x) = 2.0f * c.r - 1.0f;
                    out.video.data.at4(t, 1, y, x) = 2.0f * c.g - 1.0f;
                    out.video.data.at4(t, 2, y, x) = 2.0f * c.b - 1.0f;
                    out.mask.data.at4(t, 0, y, x) = 1;
                } else {
                    for (int c = 0; c < 3; ++c)
                        out.video.data.at4(t, c, y, x) = background(c, y, x, t);
                }
            }
        for (int k = 0; k < kJoints; ++k) {
            out.pose.keypoints.at3(t, k, 0) = joints[static_cast<size_t>(k)].x / S;
            out.pose.keypoints.at3(t, k, 1) = joints[static_cast<size_t>(k)].y / S;
            out.pose.keypoints.at3(t, k, 2) = 1.0f;
        }
        auto pm = render_pose_map(joints, S);
        std::copy_n(pm.ptr(), pm.numel(),
                    out.pose.pose_map.ptr() + static_cast<int64_t>(t) * 3 * S * S);
    }
    out.video.data = snap_to_u8_grid(out.video.data);
    return out;
}

RenderedClip render_clip(const IdentitySpec& id, const MotionSpec& motion) {
    return render_clip_over(id, motion, [&](int c, int y, int x, int t) {
        return background_value(motion, c, x + 0.5f, y + 0.5f, t);
    });
}

VideoClip render_background_clip(const MotionSpec& motion) {
    int S = motion.size, F = motion.frames;
    VideoClip out;
    out.data = nn::Array<float>({F, 3, S, S});
    for (int t = 0; t < F; ++t)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x)
                    out.data.at4(t, c, y, x) = background_value(motion, c, x + 0.5f, y + 0.5f, t);
    out.data = snap_to_u8_grid(out.data);
    return out;
}

nn::Array<float> render_pose_map(const std::array<Vec2, kJoints>& joints, int size) {
    // fixed distinct palette per bone
    static const std::array<Color, kBones> palette = {{
        {1.0f, 0.2f, 0.2f}, {1.0f, 0.6f, 0.1f}, {0.9f, 0.9f, 0.1f}, {0.5f, 1.0f, 0.1f},
        {0.1f, 1.0f, 0.3f}, {0.1f, 1.0f, 0.8f}, {0.1f, 0.7f, 1.0f}, {0.15f, 0.3f, 1.0f},
        {0.5f, 0.1f, 1.0f}, {0.85f, 0.1f, 1.0f}, {1.0f, 0.1f, 0.6f}, {0.9f, 0.4f, 0.4f},
    }};
    const float radius = 0.75f * static_cast<float>(size) / 32.0f;
    nn::Array<float> map({3, size, size});  // black background, colors in [0,1]
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            float px = x + 0.5f, py = y + 0.5f;
            for (int bIdx = 0; bIdx < kBones; ++bIdx) {
                auto [a, b] = kBonePairs[static_cast<size_t>(bIdx)];
                if (dist_sq_to_segment(px, py, joints[static_cast<size_t>(a)],
                                       joints[static_cast<size_t>(b)]) <= radius * radius) {
                    const Color& c = palette[static_cast<size_t>(bIdx)];
                    map.at3(0, y, x) = c.r;
                    map.at3(1, y, x) = c.g;
                    map.at3(2, y, x) = c.b;
                    break;
                }
            }
        }
    return map;
}

ReferenceBundle make_reference(const IdentitySpec& id) {
    auto joints = canonical_pose_joints(id);
    auto caps = figure_capsules(id, joints);
    int S = id.size;
    ReferenceBundle ref;
    ref.identity_id = id.identity_id;
    ref.image = nn::Array<float>({3, S, S});
    ref.ref_mask = nn::Array<uint8_t>({1, S, S});
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            float px = x + 0.5f, py = y + 0.5f;
            for (int ci = static_cast<int>(caps.size()) - 1; ci >= 0; --ci) {
                const auto& cap = caps[static_cast<size_t>(ci)];
                if (dist_sq_to_segment(px, py, cap.a, cap.b) <= cap.radius * cap.radius) {
                    ref.image.at3(0, y, x) = 2.0f * cap.color.r - 1.0f;
                    ref.image.at3(1, y, x) = 2.0f * cap.color.g - 1.0f;
                    ref.image.at3(2, y, x) = 2.0f * cap.color.b - 1.0f;
                    ref.ref_mask.at3(0, y, x) = 1;
                    break;
                }
            }
        }
    ref.image = snap_to_u8_grid(ref.image);
    // keep the background exactly zero after quantization (0 maps to 128 -> ~0.0039)
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x)
            if (!ref.ref_mask.at3(0, y, x))
                for (int c = 0; c < 3; ++c) ref.image.at3(c, y, x) = 0.0f;
    ref.ref_pose_map = render_pose_map(joints, S);
    return ref;
}

VideoClip replacement_oracle(const MotionSpec& motion_a, const IdentitySpec& identity_b) {
    return render_clip(identity_b, motion_a).video;
}

// ---- serialization ----

namespace {

json color_to_json(const Color& c) { return json::array({c.r, c.g, c.b}); }
Color color_from_json(const json& j) {
    return {j.at(0).get<float>(), j.at(1).get<float>(), j.at(2).get<float>()};
}

json identity_to_json(const IdentitySpec& id) {
    json j;
    j["identity_id"] = id.identity_id;
    j["size"] = id.size;
    j["torso_len"] = id.torso_len;
    j["head_len"] = id.head_len;
    j["head_radius"] = id.head_radius;
    j["shoulder_halfwidth"] = id.shoulder_halfwidth;
    j["upper_arm_len"] = id.upper_arm_len;
    j["forearm_len"] = id.forearm_len;
    j["thigh_len"] = id.thigh_len;
    j["shin_len"] = id.shin_len;
    j["limb_radius"] = id.limb_radius;
    json colors = json::array();
    for (const auto& c : id.part_colors) colors.push_back(color_to_json(c));
    j["part_colors"] = colors;
    return j;
}

IdentitySpec identity_from_json(const json& j) {
    IdentitySpec id;
    id.identity_id = j.at("identity_id").get<std::string>();
    id.size = j.at("size").get<int>();
    id.torso_len = j.at("torso_len").get<float>();
    id.head_len = j.at("head_len").get<float>();
    id.head_radius = j.at("head_radius").get<float>();
    id.shoulder_halfwidth = j.at("shoulder_halfwidth").get<float>();
    id.upper_arm_len = j.at("upper_arm_len").get<float>();
    id.forearm_len = j.at("forearm_len").get<float>();
    id.thigh_len = j.at("thigh_len").get<float>();
    id.shin_len = j.at("shin_len").get<float>();
    id.limb_radius = j.at("limb_radius").get<float>();
    for (int i = 0; i < 6; ++i)
        id.part_colors[static_cast<size_t>(i)] =
            color_from_json(j.at("part_colors").at(static_cast<size_t>(i)));
    return id;
}

json floats_to_json(const std::vector<float>& v) { return json(v); }

json motion_to_json(const MotionSpec& m) {
    json j;
    j["size"] = m.size;
    j["frames"] = m.frames;
    json root = json::array();
    for (const auto& r : m.root) root.push_back(json::array({r.x, r.y}));
    j["root"] = root;
    j["torso_sway"] = floats_to_json(m.torso_sway);
    j["arm_swing_l"] = floats_to_json(m.arm_swing_l);
    j["arm_bend_l"] = floats_to_json(m.arm_bend_l);
    j["arm_swing_r"] = floats_to_json(m.arm_swing_r);
    j["arm_bend_r"] = floats_to_json(m.arm_bend_r);
    j["leg_swing_l"] = floats_to_json(m.leg_swing_l);
    j["leg_bend_l"] = floats_to_json(m.leg_bend_l);
    j["leg_swing_r"] = floats_to_json(m.leg_swing_r);
    j["leg_bend_r"] = floats_to_json(m.leg_bend_r);
    j["scroll_vx"] = m.scroll_vx;
    j["scroll_vy"] = m.scroll_vy;
    j["texture_seed"] = m.texture_seed;
    return j;
}

MotionSpec motion_from_json(const json& j) {
    MotionSpec m;
    m.size = j.at("size").get<int>();
    m.frames = j.at("frames").get<int>();
    for (const auto& r : j.at("root"))
        m.root.push_back({r.at(0).get<float>(), r.at(1).get<float>()});
    auto vec = [&](const char* k) { return j.at(k).get<std::vector<float>>(); };
    m.torso_sway = vec("torso_sway");
    m.arm_swing_l = vec("arm_swing_l");
    m.arm_bend_l = vec("arm_bend_l");
    m.arm_swing_r = vec("arm_swing_r");
    m.arm_bend_r = vec("arm_bend_r");
    m.leg_swing_l = vec("leg_swing_l");
    m.leg_bend_l = vec("leg_bend_l");
    m.leg_swing_r = vec("leg_swing_r");
    m.leg_bend_r = vec("leg_bend_r");
    m.scroll_vx = j.at("scroll_vx").get<int>();
    m.scroll_vy = j.at("scroll_vy").get<int>();
    m.texture_seed = j.at("texture_seed").get<uint64_t>();
    return m;
}

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream os(p);
    require(os.good(), ErrorCode::io_error, "cannot write " + p.string());
    os << j.dump(2) << "\n";
}

json read_json_file(const fs::path& p) {
    std::ifstream is(p);
    require(is.good(), ErrorCode::io_error, "cannot read " + p.string());
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        fail(ErrorCode::io_error, "malformed JSON in " + p.string() + ": " + e.what());
    }
    return j;
}

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.png", i);
    return buf;
}

}  // namespace

void write_clip(const fs::path& clip_dir, const RenderedClip& clip, const IdentitySpec& id,
                const MotionSpec& motion, uint64_t seed) {
    std::error_code ec;
    fs::create_directories(clip_dir / "frames", ec);
    fs::create_directories(clip_dir / "mask", ec);
    require(!ec, ErrorCode::io_error, "cannot create " + clip_dir.string());

    int F = clip.video.frames(), S = clip.video.height();
    for (int t = 0; t < F; ++t) {
        nn::Array<float> frame({3, S, S});
        std::copy_n(clip.video.data.ptr() + static_cast<int64_t>(t) * 3 * S * S, 3 * S * S,
                    frame.ptr());
        write_png_rgb8(clip_dir / "frames" / frame_name(t), quantize_unit_range(frame));
        nn::Array<uint8_t> mframe({1, S, S});
        std::copy_n(clip.mask.data.ptr() + static_cast<int64_t>(t) * S * S, S * S, mframe.ptr());
        write_png_gray1(clip_dir / "mask" / frame_name(t), mframe);
    }

    json pose;
    json kp = json::array();
    for (int t = 0; t < F; ++t) {
        json fr = json::array();
        for (int k = 0; k < kJoints; ++k)
            fr.push_back(json::array({clip.pose.keypoints.at3(t, k, 0),
                                      clip.pose.keypoints.at3(t, k, 1),
                                      clip.pose.keypoints.at3(t, k, 2)}));
        kp.push_back(fr);
    }
    pose["keypoints"] = kp;
    write_json_file(clip_dir / "pose.json", pose);

    json meta;
    meta["seed"] = seed;
    meta["size"] = S;
    meta["frames"] = F;
    meta["identity"] = identity_to_json(id);
    meta["motion"] = motion_to_json(motion);
    write_json_file(clip_dir / "meta.json", meta);
}

PoseSequence pose_from_keypoints(const nn::Array<float>& keypoints, int size) {
    PoseSequence pose;
    pose.keypoints = keypoints;
    int F = keypoints.shape[0];
    pose.pose_map = nn::Array<float>({F, 3, size, size});
    for (int t = 0; t < F; ++t) {
        std::array<Vec2, kJoints> joints;
        for (int k = 0; k < kJoints; ++k)
            joints[static_cast<size_t>(k)] = {keypoints.at3(t, k, 0) * size,
                                              keypoints.at3(t, k, 1) * size};
        auto pm = render_pose_map(joints, size);
        std::copy_n(pm.ptr(), pm.numel(),
                    pose.pose_map.ptr() + static_cast<int64_t>(t) * 3 * size * size);
    }
    return pose;
}

ClipRecord load_clip(const fs::path& clip_dir) {
    ClipRecord rec;
    rec.dir = clip_dir;
    rec.clip_id = clip_dir.filename().string();
    json meta = read_json_file(clip_dir / "meta.json");
    int S = meta.at("size").get<int>();
    int F = meta.at("frames").get<int>();
    rec.identity = identity_from_json(meta.at("identity"));
    rec.motion = motion_from_json(meta.at("motion"));

    rec.video.data = nn::Array<float>({F, 3, S, S});
    rec.precise.data = nn::Array<uint8_t>({F, 1, S, S});
    rec.precise.form = MaskForm::precise;
    for (int t = 0; t < F; ++t) {
        auto frame = read_png_rgb8(clip_dir / "frames" / frame_name(t));
        require(frame.shape == nn::Shape({3, S, S}), ErrorCode::invalid_dataset,
                "clip frame size mismatch in " + clip_dir.string());
        auto ff = dequantize_unit_range(frame);
        std::copy_n(ff.ptr(), ff.numel(),
                    rec.video.data.ptr() + static_cast<int64_t>(t) * 3 * S * S);
        auto mf = read_png_gray1(clip_dir / "mask" / frame_name(t));
        require(mf.shape == nn::Shape({1, S, S}), ErrorCode::invalid_dataset,
                "clip mask size mismatch in " + clip_dir.string());
        std::copy_n(mf.ptr(), mf.numel(),
                    rec.precise.data.ptr() + static_cast<int64_t>(t) * S * S);
    }

    json pose = read_json_file(clip_dir / "pose.json");
    nn::Array<float> kp({F, kJoints, 3});
    const auto& arr = pose.at("keypoints");
    require(static_cast<int>(arr.size()) == F, ErrorCode::invalid_dataset,
            "pose.json frame count mismatch");
    for (int t = 0; t < F; ++t)
        for (int k = 0; k < kJoints; ++k)
            for (int c = 0; c < 3; ++c)
                kp.at3(t, k, c) = arr.at(static_cast<size_t>(t))
                                      .at(static_cast<size_t>(k))
                                      .at(static_cast<size_t>(c))
                                      .get<float>();
    rec.pose = pose_from_keypoints(kp, S);
    return rec;
}

DatasetManifest make_dataset(int n_clips, uint64_t seed, const fs::path& out_dir, int size,
                             int frames) {
    require(n_clips >= 1, ErrorCode::invalid_argument, "make_dataset: need n >= 1");
    std::error_code ec;
    fs::create_directories(out_dir / "clips", ec);
    require(!ec, ErrorCode::io_error, "cannot create " + out_dir.string());

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.size = size;
    manifest.frames = frames;

    for (int i = 0; i < n_clips; ++i) {
        uint64_t clip_seed = Rng::derive_seed(seed, static_cast<uint64_t>(i));
        Rng rng(clip_seed);
        IdentitySpec id = make_identity(rng, size);
        MotionSpec motion = make_motion(rng, frames, size);
        auto clip = render_clip(id, motion);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "clip_%04d", i);
        write_clip(out_dir / "clips" / buf, clip, id, motion, clip_seed);
        manifest.clips.push_back({buf, id.identity_id, clip_seed});
    }

    json j;
    j["seed"] = manifest.seed;
    j["size"] = manifest.size;
    j["frames"] = manifest.frames;
    json clips = json::array();
    for (const auto& e : manifest.clips)
        clips.push_back({{"clip_id", e.clip_id}, {"identity_id", e.identity_id}, {"seed", e.seed}});
    j["clips"] = clips;
    write_json_file(out_dir / "manifest.json", j);
    return manifest;
}

DatasetManifest load_manifest(const fs::path& dataset_dir) {
    json j = read_json_file(dataset_dir / "manifest.json");
    DatasetManifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.size = j.at("size").get<int>();
    m.frames = j.at("frames").get<int>();
    for (const auto& e : j.at("clips"))
        m.clips.push_back({e.at("clip_id").get<std::string>(),
                           e.at("identity_id").get<std::string>(),
                           e.at("seed").get<uint64_t>()});
    return m;
}

}  // namespace recast::synth
