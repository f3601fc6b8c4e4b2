#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace recast {

// Deterministic RNG used throughout. normal() is a hand-rolled Box-Muller
// (no cached spare) so the draw count per call is fixed and the state
// serializes cleanly.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // N(0, 1); consumes exactly two uniforms
    double normal();

    // [0, n), unbiased
    int64_t uniform_int(int64_t n);

    int64_t uniform_int(int64_t lo, int64_t hi_inclusive) {
        return lo + uniform_int(hi_inclusive - lo + 1);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent stream derived from a master seed and a stream index.
    static uint64_t derive_seed(uint64_t master, uint64_t stream);

    std::string serialize() const;
    void deserialize(const std::string& s);

private:
    std::mt19937_64 gen_;
};

}  // namespace recast
