#include <cmath>
#include <vector>

#include "doctest.h"
#include "recast/diffusion.h"
#include "recast/rng.h"

using namespace recast;
using nn::Array;

namespace {

Array<double> random_array(Rng& rng, nn::Shape shape) {
    Array<double> a(std::move(shape));
    for (int64_t i = 0; i < a.numel(); ++i) a[i] = rng.normal();
    return a;
}

double max_abs_diff(const Array<double>& a, const Array<double>& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Schedule with hand-picked alpha_bar values, for the hypothetical-limit cases.
DiffusionSchedule direct_schedule(std::vector<double> beta) {
    DiffusionSchedule s;
    s.T = static_cast<int>(beta.size());
    s.beta = beta;
    double p = 1.0;
    for (double b : beta) {
        p *= 1.0 - b;
        s.alpha_bar.push_back(p);
    }
    return s;
}

}  // namespace

TEST_CASE("make_schedule invariants for all supported T") {
    for (int T : {1, 4, 50, 1000}) {
        auto s = make_schedule(T, ScheduleKind::linear);
        REQUIRE(s.T == T);
        REQUIRE(static_cast<int>(s.beta.size()) == T);
        // monotonicity + product consistency
        double prod = 1.0, prev = 1.0;
        for (int t = 1; t <= T; ++t) {
            double b = s.beta_at(t);
            CHECK(b > 0.0);
            CHECK(b < 1.0);
            prod *= 1.0 - b;
            CHECK(s.alpha_bar_at(t) == doctest::Approx(prod).epsilon(1e-12));
            CHECK(s.alpha_bar_at(t) < prev);
            prev = s.alpha_bar_at(t);
        }
        // terminal state near pure noise for default schedules
        CHECK(s.alpha_bar_at(T) < 0.01);
        CHECK_NOTHROW(validate_schedule(s, true));
    }
}

TEST_CASE("make_schedule rejects bad arguments") {
    CHECK_THROWS_AS(make_schedule(0, ScheduleKind::linear), Error);
    CHECK_THROWS_AS(make_schedule(-3, ScheduleKind::linear), Error);
    try {
        make_schedule(0, ScheduleKind::linear);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_argument);
    }
}

TEST_CASE("single-step schedule built directly") {
    auto s = direct_schedule({0.5});
    CHECK(s.alpha_bar_at(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("T=4 explicit DDPM range matches the product oracle") {
    auto s = make_schedule(4, ScheduleKind::linear, 1e-4, 2e-2);
    // independent brute-force product over the inclusive linspace
    double oracle = 1.0;
    for (int i = 0; i < 4; ++i) {
        double beta = 1e-4 + (2e-2 - 1e-4) * i / 3.0;
        oracle *= 1.0 - beta;
    }
    CHECK(s.alpha_bar_at(4) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(s.alpha_bar_at(4) == doctest::Approx(0.960294163157560).epsilon(1e-12));
    CHECK(s.beta_at(1) == doctest::Approx(1e-4));
    CHECK(s.beta_at(4) == doctest::Approx(2e-2));
}

TEST_CASE("forward_marginal limits and scalar case") {
    Array<double> x0({1}, {1.0});
    Array<double> eps({1}, {0.0});

    // alpha_bar == 1 limit (beta -> 0 is hypothetical; inject directly)
    DiffusionSchedule s;
    s.T = 2;
    s.beta = {1e-12, 0.75};
    s.alpha_bar = {1.0, 0.25};
    Array<double> eps1({1}, {0.7});
    auto out = forward_marginal(x0, 1, eps1, s);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-6));

    // alpha_bar == 0 limit
    DiffusionSchedule s0;
    s0.T = 1;
    s0.beta = {0.9999999};
    s0.alpha_bar = {0.0};
    auto out0 = forward_marginal(x0, 1, eps1, s0);
    CHECK(out0[0] == doctest::Approx(0.7));

    // scalar: x0=1, eps=0, ab=0.25 -> 0.5
    auto out2 = forward_marginal(x0, 2, eps, s);
    CHECK(out2[0] == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(forward_marginal(x0, 0, eps, s), Error);
    CHECK_THROWS_AS(forward_marginal(x0, 3, eps, s), Error);
}

TEST_CASE("iterated per-step transitions match forward_marginal in distribution") {
    // Monte-Carlo oracle over the iterated single-step updates
    const int T = 10;
    const int N = 10000;
    auto s = make_schedule(T, ScheduleKind::linear, 0.01, 0.25);
    Rng rng(123);
    const double x0 = 0.8;

    double sum = 0.0, sumsq = 0.0;
    for (int n = 0; n < N; ++n) {
        double x = x0;
        for (int t = 1; t <= T; ++t)
            x = std::sqrt(1.0 - s.beta_at(t)) * x + std::sqrt(s.beta_at(t)) * rng.normal();
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / N;
    double var = sumsq / N - mean * mean;

    double want_mean = std::sqrt(s.alpha_bar_at(T)) * x0;
    double want_var = 1.0 - s.alpha_bar_at(T);

    // 3 sigma of the estimators
    double mean_tol = 3.0 * std::sqrt(want_var / N);
    double var_tol = 3.0 * want_var * std::sqrt(2.0 / (N - 1));
    CHECK(std::abs(mean - want_mean) < mean_tol);
    CHECK(std::abs(var - want_var) < var_tol);
}

TEST_CASE("v_target limits and arithmetic oracle") {
    DiffusionSchedule s;
    s.T = 3;
    s.beta = {1e-12, 0.75, 0.999};
    s.alpha_bar = {1.0, 0.25, 0.0};

    Array<double> x0({1}, {2.0});
    Array<double> eps({1}, {4.0});

    auto v1 = v_target(x0, eps, 1, s);  // ab = 1 -> v = eps
    CHECK(v1[0] == doctest::Approx(4.0).epsilon(1e-6));
    auto v3 = v_target(x0, eps, 3, s);  // ab = 0 -> v = -x0
    CHECK(v3[0] == doctest::Approx(-2.0));
    auto v2 = v_target(x0, eps, 2, s);  // 0.5*4 - sqrt(0.75)*2
    CHECK(v2[0] == doctest::Approx(0.267949192431123).epsilon(1e-12));
}

TEST_CASE("ddim_step identities") {
    Rng rng(7);
    auto s = make_schedule(40, ScheduleKind::linear);

    SUBCASE("equal alpha_bar is a no-op") {
        DiffusionSchedule eq;
        eq.T = 2;
        eq.beta = {0.3, 1e-13};
        eq.alpha_bar = {0.7, 0.7};
        auto x = random_array(rng, {2, 3, 4, 4});
        auto v = random_array(rng, {2, 3, 4, 4});
        auto out = ddim_step(x, v, 2, 1, eq);
        CHECK(max_abs_diff(out, x) < 1e-9);
    }

    SUBCASE("round-trip identity on random tensors") {
        auto x0 = random_array(rng, {2, 4, 8, 8});
        auto eps = random_array(rng, {2, 4, 8, 8});
        for (auto [t, t_prev] : {std::pair{40, 25}, {25, 10}, {10, 1}, {7, 0}}) {
            auto xt = forward_marginal(x0, t, eps, s);
            auto v = v_target(x0, eps, t, s);
            auto got = ddim_step(xt, v, t, t_prev, s);
            auto want = t_prev == 0 ? x0 : forward_marginal(x0, t_prev, eps, s);
            for (int64_t i = 0; i < got.numel(); ++i)
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
        }
    }

    SUBCASE("t_prev >= t rejected") {
        auto x = random_array(rng, {1, 1, 2, 2});
        CHECK_THROWS_AS(ddim_step(x, x, 5, 5, s), Error);
        CHECK_THROWS_AS(ddim_step(x, x, 5, 9, s), Error);
    }
}

TEST_CASE("cfg_combine algebra") {
    Array<double> vc({3}, {1.0, -2.0, 0.5});
    Array<double> vu({3}, {0.0, 1.0, 0.5});

    auto s1 = cfg_combine(vc, vu, 1.0);
    for (int i = 0; i < 3; ++i) CHECK(s1[i] == doctest::Approx(vc[i]));
    auto s0 = cfg_combine(vc, vu, 0.0);
    for (int i = 0; i < 3; ++i) CHECK(s0[i] == doctest::Approx(vu[i]));

    Array<double> z({1}, {0.0});
    Array<double> o({1}, {1.0});
    CHECK(cfg_combine(o, z, 7.5)[0] == doctest::Approx(7.5));

    // guidance is a no-op when predictions coincide
    for (double scale : {0.0, 0.5, 1.0, 3.0, 12.0}) {
        auto r = cfg_combine(vc, vc, scale);
        for (int i = 0; i < 3; ++i) CHECK(r[i] == doctest::Approx(vc[i]));
    }
}

TEST_CASE("sampling timestep subsequence") {
    auto ts = sampling_timesteps(1000, 50);
    REQUIRE(ts.size() == 50);
    CHECK(ts.front() == 1000);
    for (size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
    CHECK(ts.back() >= 1);

    auto all = sampling_timesteps(10, 10);
    for (int k = 0; k < 10; ++k) CHECK(all[static_cast<size_t>(k)] == 10 - k);
}

TEST_CASE("sample with an exact oracle denoiser") {
    Rng rng(99);
    auto s = make_schedule(1000, ScheduleKind::linear);
    auto x0 = random_array(rng, {1, 2, 6, 6});

    // Oracle: recovers eps from (x_t, t) given the known x0, returns the exact v.
    auto oracle = [&](const Array<double>& xt, int t, int /*cond*/) {
        double ab = s.alpha_bar_at(t);
        double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
        Array<double> v(xt.shape);
        for (int64_t i = 0; i < xt.numel(); ++i) {
            double eps = (xt[i] - a * x0[i]) / b;
            v[i] = a * eps - b * x0[i];
        }
        return v;
    };

    auto noise = random_array(rng, {1, 2, 6, 6});

    SUBCASE("single step, T=1") {
        auto s1 = make_schedule(1, ScheduleKind::linear);
        auto oracle1 = [&](const Array<double>& xt, int t, int) {
            double ab = s1.alpha_bar_at(t);
            double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
            Array<double> v(xt.shape);
            for (int64_t i = 0; i < xt.numel(); ++i) {
                double eps = (xt[i] - a * x0[i]) / b;
                v[i] = a * eps - b * x0[i];
            }
            return v;
        };
        SamplerConfig cfg;
        cfg.steps = 1;
        auto out = sample(oracle1, noise, 0, 0, cfg, s1);
        CHECK(max_abs_diff(out, x0) < 1e-9);
    }

    SUBCASE("50 steps recovers x0") {
        SamplerConfig cfg;
        cfg.steps = 50;
        auto out = sample(oracle, noise, 0, 0, cfg, s);
        CHECK(max_abs_diff(out, x0) < 1e-5);
    }

    SUBCASE("deterministic and pure") {
        SamplerConfig cfg;
        cfg.steps = 25;
        auto a = sample(oracle, noise, 0, 0, cfg, s);
        auto b = sample(oracle, noise, 0, 0, cfg, s);
        for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);  // bitwise
    }

    SUBCASE("shape contract enforced") {
        auto bad = [&](const Array<double>& xt, int, int) {
            return Array<double>({1, 2, 3, 3});
        };
        SamplerConfig cfg;
        cfg.steps = 4;
        CHECK_THROWS_AS(sample(bad, noise, 0, 0, cfg, s), Error);
    }
}
