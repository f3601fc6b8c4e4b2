#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "recast/error.h"
#include "recast/nn/array.h"

namespace recast {

// Noise schedule: beta[t] and alpha_bar[t] for t in 1..T, alpha_bar_at(0) = 1.
// All schedule math is double precision.
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;       // size T, beta[t-1] = beta_t
    std::vector<double> alpha_bar;  // size T, alpha_bar[t-1] = prod_{s<=t}(1-beta_s)

    double beta_at(int t) const {
        require(t >= 1 && t <= T, ErrorCode::invalid_step, "beta_at: t out of range");
        return beta[static_cast<size_t>(t - 1)];
    }
    double alpha_bar_at(int t) const {
        if (t == 0) return 1.0;
        require(t >= 1 && t <= T, ErrorCode::invalid_step, "alpha_bar_at: t out of range");
        return alpha_bar[static_cast<size_t>(t - 1)];
    }
};

enum class ScheduleKind { linear };

// Linear betas. With defaults the range scales as 1000/T (clamped below 1)
// so the terminal state stays near pure noise for any T; explicit ranges are
// honored verbatim and only the structural invariants are enforced.
DiffusionSchedule make_schedule(int T, ScheduleKind kind);
DiffusionSchedule make_schedule(int T, ScheduleKind kind, double beta_start, double beta_end);

// Checks 0 < beta < 1, strict alpha_bar decrease, and product consistency
// (1e-12 relative). require_terminal additionally checks alpha_bar[T] < 0.01.
void validate_schedule(const DiffusionSchedule& s, bool require_terminal);

struct SamplerConfig {
    int steps = 50;
    double guidance_scale = 1.0;
    double eta = 0.0;  // deterministic DDIM
    uint64_t seed = 0;
};

// Uniform-stride inference subsequence T = t_0 > t_1 > ... > t_{S-1} >= 1,
// followed by a terminal step to 0.
std::vector<int> sampling_timesteps(int T, int steps);

template <typename T>
nn::Array<T> forward_marginal(const nn::Array<T>& x0, int t, const nn::Array<T>& eps,
                              const DiffusionSchedule& sched) {
    require(t >= 1 && t <= sched.T, ErrorCode::invalid_step,
            "forward_marginal: t out of range [1, T]");
    nn::check_same_shape(x0, eps, "forward_marginal");
    double ab = sched.alpha_bar_at(t);
    T a = static_cast<T>(std::sqrt(ab));
    T b = static_cast<T>(std::sqrt(1.0 - ab));
    nn::Array<T> out(x0.shape);
    for (int64_t i = 0; i < x0.numel(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

// v-prediction target: v = sqrt(ab)*eps - sqrt(1-ab)*x0.
template <typename T>
nn::Array<T> v_target(const nn::Array<T>& x0, const nn::Array<T>& eps, int t,
                      const DiffusionSchedule& sched) {
    require(t >= 1 && t <= sched.T, ErrorCode::invalid_step, "v_target: t out of range [1, T]");
    nn::check_same_shape(x0, eps, "v_target");
    double ab = sched.alpha_bar_at(t);
    T a = static_cast<T>(std::sqrt(ab));
    T b = static_cast<T>(std::sqrt(1.0 - ab));
    nn::Array<T> out(x0.shape);
    for (int64_t i = 0; i < x0.numel(); ++i) out[i] = a * eps[i] - b * x0[i];
    return out;
}

// Deterministic DDIM update. Reconstructs x0_hat and eps_hat from (x_t, v_hat)
// and re-noises to t_prev; alpha_bar_at(0) = 1, so t_prev = 0 returns x0_hat.
template <typename T>
nn::Array<T> ddim_step(const nn::Array<T>& x_t, const nn::Array<T>& v_hat, int t, int t_prev,
                       const DiffusionSchedule& sched) {
    require(t_prev < t, ErrorCode::invalid_step_pair, "ddim_step: t_prev must be < t");
    require(t >= 1 && t <= sched.T, ErrorCode::invalid_step, "ddim_step: t out of range");
    require(t_prev >= 0, ErrorCode::invalid_step, "ddim_step: t_prev out of range");
    nn::check_same_shape(x_t, v_hat, "ddim_step");
    double ab_t = sched.alpha_bar_at(t);
    double ab_p = sched.alpha_bar_at(t_prev);
    T a = static_cast<T>(std::sqrt(ab_t));
    T b = static_cast<T>(std::sqrt(1.0 - ab_t));
    T ap = static_cast<T>(std::sqrt(ab_p));
    T bp = static_cast<T>(std::sqrt(1.0 - ab_p));
    nn::Array<T> out(x_t.shape);
    for (int64_t i = 0; i < x_t.numel(); ++i) {
        T x0_hat = a * x_t[i] - b * v_hat[i];
        T eps_hat = b * x_t[i] + a * v_hat[i];
        out[i] = ap * x0_hat + bp * eps_hat;
    }
    return out;
}

template <typename T>
nn::Array<T> cfg_combine(const nn::Array<T>& v_cond, const nn::Array<T>& v_uncond, double scale) {
    nn::check_same_shape(v_cond, v_uncond, "cfg_combine");
    nn::Array<T> out(v_cond.shape);
    T s = static_cast<T>(scale);
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = v_uncond[i] + s * (v_cond[i] - v_uncond[i]);
    return out;
}

// Full DDIM sampling loop with classifier-free guidance. denoiser is called
// as denoiser(x_t, t, cond) and must return a v prediction of x_t's shape.
// The unconditional branch is skipped when guidance_scale == 1 (identical
// result by the cfg_combine algebra).
template <typename T, typename Cond, typename DenoiseFn>
nn::Array<T> sample(DenoiseFn&& denoiser, const nn::Array<T>& init_noise, const Cond& cond,
                    const Cond& cond_null, const SamplerConfig& cfg,
                    const DiffusionSchedule& sched) {
    require(cfg.steps >= 1 && cfg.steps <= sched.T, ErrorCode::invalid_argument,
            "sample: steps must be in [1, T]");
    std::vector<int> ts = sampling_timesteps(sched.T, cfg.steps);
    nn::Array<T> x = init_noise;
    for (size_t i = 0; i < ts.size(); ++i) {
        int t = ts[i];
        int t_prev = (i + 1 < ts.size()) ? ts[i + 1] : 0;
        nn::Array<T> v = denoiser(x, t, cond);
        require(v.shape == x.shape, ErrorCode::model_contract_violation,
                "sample: denoiser output shape mismatch");
        if (cfg.guidance_scale != 1.0) {
            nn::Array<T> vu = denoiser(x, t, cond_null);
            require(vu.shape == x.shape, ErrorCode::model_contract_violation,
                    "sample: denoiser output shape mismatch (uncond)");
            v = cfg_combine(v, vu, cfg.guidance_scale);
        }
        x = ddim_step(x, v, t, t_prev, sched);
    }
    return x;
}

}  // namespace recast
