#include "recast/diffusion.h"

#include <algorithm>
#include <cmath>

namespace recast {

namespace {

DiffusionSchedule build_linear(int T, double beta_start, double beta_end) {
    DiffusionSchedule s;
    s.T = T;
    s.beta.resize(static_cast<size_t>(T));
    s.alpha_bar.resize(static_cast<size_t>(T));
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        double b = (T == 1) ? beta_end
                            : beta_start + (beta_end - beta_start) * static_cast<double>(i) /
                                               static_cast<double>(T - 1);
        s.beta[static_cast<size_t>(i)] = b;
        prod *= 1.0 - b;
        s.alpha_bar[static_cast<size_t>(i)] = prod;
    }
    return s;
}

}  // namespace

DiffusionSchedule make_schedule(int T, ScheduleKind kind) {
    require(T >= 1, ErrorCode::invalid_argument, "make_schedule: T must be >= 1");
    if (kind != ScheduleKind::linear)
        fail(ErrorCode::unsupported_schedule, "make_schedule: unknown schedule kind");
    // Scale the DDPM range (1e-4, 2e-2 at T=1000) with 1000/T so alpha_bar[T]
    // lands near pure noise for any step count.
    double scale = 1000.0 / static_cast<double>(T);
    double beta_start = std::min(0.999, 1e-4 * scale);
    double beta_end = std::min(0.999, 2e-2 * scale);
    DiffusionSchedule s = build_linear(T, beta_start, beta_end);
    validate_schedule(s, /*require_terminal=*/true);
    return s;
}

DiffusionSchedule make_schedule(int T, ScheduleKind kind, double beta_start, double beta_end) {
    require(T >= 1, ErrorCode::invalid_argument, "make_schedule: T must be >= 1");
    if (kind != ScheduleKind::linear)
        fail(ErrorCode::unsupported_schedule, "make_schedule: unknown schedule kind");
    DiffusionSchedule s = build_linear(T, beta_start, beta_end);
    validate_schedule(s, /*require_terminal=*/false);
    return s;
}

void validate_schedule(const DiffusionSchedule& s, bool require_terminal) {
    require(s.T >= 1, ErrorCode::invalid_argument, "schedule: T must be >= 1");
    require(static_cast<int>(s.beta.size()) == s.T && static_cast<int>(s.alpha_bar.size()) == s.T,
            ErrorCode::invalid_argument, "schedule: array sizes differ from T");
    double prod = 1.0;
    double prev = 1.0;
    for (int t = 1; t <= s.T; ++t) {
        double b = s.beta[static_cast<size_t>(t - 1)];
        double ab = s.alpha_bar[static_cast<size_t>(t - 1)];
        require(b > 0.0 && b < 1.0, ErrorCode::invalid_argument,
                "schedule: beta_t must lie in (0, 1)");
        require(ab < prev, ErrorCode::invalid_argument,
                "schedule: alpha_bar must be strictly decreasing");
        prod *= 1.0 - b;
        require(std::abs(ab - prod) <= 1e-12 * std::max(std::abs(prod), 1e-300),
                ErrorCode::invalid_argument,
                "schedule: alpha_bar inconsistent with the beta product");
        prev = ab;
    }
    if (require_terminal) {
        require(s.alpha_bar.back() < 0.01, ErrorCode::invalid_argument,
                "schedule: alpha_bar[T] must be < 0.01 (terminal near pure noise)");
    }
}

std::vector<int> sampling_timesteps(int T, int steps) {
    require(steps >= 1 && steps <= T, ErrorCode::invalid_argument,
            "sampling_timesteps: steps must be in [1, T]");
    std::vector<int> ts(static_cast<size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        ts[static_cast<size_t>(k)] =
            T - static_cast<int>(static_cast<int64_t>(k) * T / steps);
    }
    return ts;
}

}  // namespace recast
