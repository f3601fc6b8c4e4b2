#include "recast/rng.h"

#include <cmath>
#include <sstream>

#include "recast/error.h"

namespace recast {

double Rng::normal() {
    // u1 in (0, 1] so the log is finite
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int64_t Rng::uniform_int(int64_t n) {
    require(n > 0, ErrorCode::invalid_argument, "uniform_int: n must be positive");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return static_cast<int64_t>(r % un);
}

uint64_t Rng::derive_seed(uint64_t master, uint64_t stream) {
    // splitmix64 over the combined key
    uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
}

void Rng::deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    require(!is.fail(), ErrorCode::checkpoint_error, "Rng::deserialize: malformed state");
}

}  // namespace recast
