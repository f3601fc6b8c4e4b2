#include "recast/masks.h"

#include <algorithm>
#include <cmath>

namespace recast {

const char* mask_form_name(MaskForm f) {
    switch (f) {
        case MaskForm::precise: return "precise";
        case MaskForm::bbox: return "bbox";
        case MaskForm::inflated: return "inflated";
        case MaskForm::blended: return "blended";
        case MaskForm::edge_destruction: return "edge_destruction";
    }
    return "unknown";
}

MaskForm mask_form_from_name(const std::string& name) {
    for (int i = 0; i < 5; ++i) {
        MaskForm f = static_cast<MaskForm>(i);
        if (name == mask_form_name(f)) return f;
    }
    fail(ErrorCode::usage_error, "unknown mask form: " + name);
}

void MaskPolicy::validate() const {
    double sum = 0.0;
    for (double w : form_weights) {
        require(w >= 0.0, ErrorCode::invalid_argument, "MaskPolicy: negative form weight");
        sum += w;
    }
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::invalid_argument,
            "MaskPolicy: form weights must sum to 1");
    require(inflate_radius_min >= 0 && inflate_radius_min <= inflate_radius_max,
            ErrorCode::invalid_argument, "MaskPolicy: bad inflate radius range");
    require(blend_count_min >= 0 && blend_count_min <= blend_count_max,
            ErrorCode::invalid_argument, "MaskPolicy: bad blend count range");
    require(edge_shape_count_min >= 0 && edge_shape_count_min <= edge_shape_count_max,
            ErrorCode::invalid_argument, "MaskPolicy: bad edge shape count range");
    require(edge_shape_radius_min >= 0 && edge_shape_radius_min <= edge_shape_radius_max,
            ErrorCode::invalid_argument, "MaskPolicy: bad edge shape radius range");
    require(blend_offset_div >= 1, ErrorCode::invalid_argument,
            "MaskPolicy: blend_offset_div must be >= 1");
}

bool mask_is_binary(const nn::Array<uint8_t>& m) {
    for (int64_t i = 0; i < m.numel(); ++i)
        if (m[i] > 1) return false;
    return true;
}

bool mask_subset(const MaskClip& a, const MaskClip& b) {
    if (a.data.shape != b.data.shape) return false;
    for (int64_t i = 0; i < a.data.numel(); ++i)
        if (a.data[i] && !b.data[i]) return false;
    return true;
}

int64_t mask_area(const MaskClip& m) {
    int64_t n = 0;
    for (int64_t i = 0; i < m.data.numel(); ++i) n += m.data[i];
    return n;
}

MaskClip precise_mask(const nn::Array<uint8_t>& seg) {
    require(seg.rank() == 4 && seg.shape[1] == 1, ErrorCode::invalid_mask,
            "precise_mask: expected [F,1,H,W]");
    require(mask_is_binary(seg), ErrorCode::invalid_mask,
            "precise_mask: segmentation must be binary {0,1}");
    MaskClip out;
    out.data = seg;
    out.form = MaskForm::precise;
    return out;
}

MaskClip bbox_mask(const MaskClip& precise, bool per_clip_union) {
    const auto& m = precise.data;
    int F = m.shape[0], H = m.shape[2], W = m.shape[3];
    MaskClip out;
    out.data = nn::Array<uint8_t>(m.shape);
    out.form = MaskForm::bbox;

    auto frame_box = [&](int f, int& r0, int& r1, int& c0, int& c1) {
        r0 = H, r1 = -1, c0 = W, c1 = -1;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (m.at4(f, 0, y, x)) {
                    r0 = std::min(r0, y);
                    r1 = std::max(r1, y);
                    c0 = std::min(c0, x);
                    c1 = std::max(c1, x);
                }
    };

    if (per_clip_union) {
        int R0 = H, R1 = -1, C0 = W, C1 = -1;
        for (int f = 0; f < F; ++f) {
            int r0, r1, c0, c1;
            frame_box(f, r0, r1, c0, c1);
            if (r1 < 0) continue;
            R0 = std::min(R0, r0);
            R1 = std::max(R1, r1);
            C0 = std::min(C0, c0);
            C1 = std::max(C1, c1);
        }
        if (R1 >= 0)
            for (int f = 0; f < F; ++f)
                for (int y = R0; y <= R1; ++y)
                    for (int x = C0; x <= C1; ++x) out.data.at4(f, 0, y, x) = 1;
        return out;
    }

    for (int f = 0; f < F; ++f) {
        int r0, r1, c0, c1;
        frame_box(f, r0, r1, c0, c1);
        if (r1 < 0) continue;  // empty frame stays empty
        for (int y = r0; y <= r1; ++y)
            for (int x = c0; x <= c1; ++x) out.data.at4(f, 0, y, x) = 1;
    }
    return out;
}

namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dy * dy + dx * dx <= radius * radius) offs.emplace_back(dy, dx);
    return offs;
}

void stamp_disk(nn::Array<uint8_t>& m, int f, int cy, int cx,
                const std::vector<std::pair<int, int>>& offs) {
    int H = m.shape[2], W = m.shape[3];
    for (auto [dy, dx] : offs) {
        int y = cy + dy, x = cx + dx;
        if (y >= 0 && y < H && x >= 0 && x < W) m.at4(f, 0, y, x) = 1;
    }
}

}  // namespace

MaskClip inflate_mask(const MaskClip& precise, int radius) {
    require(radius >= 0, ErrorCode::invalid_argument, "inflate_mask: negative radius");
    MaskClip out;
    out.form = MaskForm::inflated;
    if (radius == 0) {
        out.data = precise.data;
        return out;
    }
    const auto& m = precise.data;
    int F = m.shape[0], H = m.shape[2], W = m.shape[3];
    out.data = nn::Array<uint8_t>(m.shape);
    auto offs = disk_offsets(radius);
    for (int f = 0; f < F; ++f)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                if (m.at4(f, 0, y, x)) stamp_disk(out.data, f, y, x, offs);
    return out;
}

MaskClip blend_mask(const MaskClip& precise, const std::vector<MaskClip>& donors,
                    const std::vector<std::pair<int, int>>& offsets) {
    require(donors.size() == offsets.size(), ErrorCode::invalid_argument,
            "blend_mask: donors and offsets differ in length");
    MaskClip out;
    out.data = precise.data;
    out.form = MaskForm::blended;
    int F = out.data.shape[0], H = out.data.shape[2], W = out.data.shape[3];
    for (size_t d = 0; d < donors.size(); ++d) {
        const auto& dm = donors[d].data;
        require(dm.shape == precise.data.shape, ErrorCode::invalid_shape,
                "blend_mask: donor shape mismatch");
        auto [oy, ox] = offsets[d];
        for (int f = 0; f < F; ++f)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    if (!dm.at4(f, 0, y, x)) continue;
                    int ty = y + oy, tx = x + ox;
                    if (ty >= 0 && ty < H && tx >= 0 && tx < W) out.data.at4(f, 0, ty, tx) = 1;
                }
    }
    return out;
}

MaskClip edge_destruction_mask(const MaskClip& precise, const MaskPolicy& policy, Rng& rng) {
    policy.validate();
    const auto& m = precise.data;
    int F = m.shape[0], H = m.shape[2], W = m.shape[3];
    MaskClip out;
    out.data = m;
    out.form = MaskForm::edge_destruction;

    auto is_fg = [&](int f, int y, int x) {
        return y >= 0 && y < H && x >= 0 && x < W && m.at4(f, 0, y, x) != 0;
    };

    for (int f = 0; f < F; ++f) {
        std::vector<std::pair<int, int>> boundary;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                if (!m.at4(f, 0, y, x)) continue;
                if (!is_fg(f, y - 1, x) || !is_fg(f, y + 1, x) || !is_fg(f, y, x - 1) ||
                    !is_fg(f, y, x + 1))
                    boundary.emplace_back(y, x);
            }
        if (boundary.empty()) continue;  // empty frame passes through
        int count = static_cast<int>(
            rng.uniform_int(policy.edge_shape_count_min, policy.edge_shape_count_max));
        for (int s = 0; s < count; ++s) {
            auto [cy, cx] = boundary[static_cast<size_t>(
                rng.uniform_int(static_cast<int64_t>(boundary.size())))];
            int radius = static_cast<int>(
                rng.uniform_int(policy.edge_shape_radius_min, policy.edge_shape_radius_max));
            stamp_disk(out.data, f, cy, cx, disk_offsets(radius));
        }
    }
    return out;
}

MaskClip sample_mask_form(const MaskClip& precise, const MaskPolicy& policy, Rng& rng,
                          const std::vector<MaskClip>* donors) {
    policy.validate();
    double u = rng.uniform();
    double acc = 0.0;
    int form = 4;
    for (int i = 0; i < 5; ++i) {
        acc += policy.form_weights[static_cast<size_t>(i)];
        if (u < acc) {
            form = i;
            break;
        }
    }
    int H = precise.data.shape[2], W = precise.data.shape[3];
    switch (static_cast<MaskForm>(form)) {
        case MaskForm::precise: {
            MaskClip out = precise;
            out.form = MaskForm::precise;
            return out;
        }
        case MaskForm::bbox:
            return bbox_mask(precise, policy.bbox_per_clip_union);
        case MaskForm::inflated: {
            int radius = static_cast<int>(
                rng.uniform_int(policy.inflate_radius_min, policy.inflate_radius_max));
            return inflate_mask(precise, radius);
        }
        case MaskForm::blended: {
            int count = static_cast<int>(
                rng.uniform_int(policy.blend_count_min, policy.blend_count_max));
            std::vector<MaskClip> picked;
            std::vector<std::pair<int, int>> offsets;
            int oy_max = H / policy.blend_offset_div, ox_max = W / policy.blend_offset_div;
            for (int i = 0; i < count; ++i) {
                if (donors && !donors->empty()) {
                    picked.push_back(
                        (*donors)[static_cast<size_t>(rng.uniform_int(donors->size()))]);
                } else {
                    picked.push_back(precise);
                }
                int oy = static_cast<int>(rng.uniform_int(-oy_max, oy_max));
                int ox = static_cast<int>(rng.uniform_int(-ox_max, ox_max));
                offsets.emplace_back(oy, ox);
            }
            return blend_mask(precise, picked, offsets);
        }
        case MaskForm::edge_destruction:
            return edge_destruction_mask(precise, policy, rng);
    }
    fail(ErrorCode::invalid_argument, "sample_mask_form: unreachable");
}

VideoClip apply_mask(const VideoClip& video, const MaskClip& mask) {
    const auto& v = video.data;
    const auto& m = mask.data;
    require(v.rank() == 4 && m.rank() == 4 && v.shape[0] == m.shape[0] &&
                m.shape[1] == 1 && v.shape[2] == m.shape[2] && v.shape[3] == m.shape[3],
            ErrorCode::invalid_argument, "apply_mask: video/mask shape mismatch");
    VideoClip out;
    out.data = nn::Array<float>(v.shape);
    int F = v.shape[0], C = v.shape[1], H = v.shape[2], W = v.shape[3];
    for (int f = 0; f < F; ++f)
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    out.data.at4(f, c, y, x) =
                        m.at4(f, 0, y, x) ? 0.0f : v.at4(f, c, y, x);
    return out;
}

}  // namespace recast
