#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

namespace gibbsdrift {

// Counter-style splittable random stream built on the splitmix64 update.
//
// The contract used throughout the project: every logical unit of randomness
// (a trajectory step, a Monte-Carlo sample, a check) owns a substream derived
// from a master seed and one or two 64-bit indices, so results are bit-stable
// under any parallel schedule. std::random streams are not splittable, hence
// this small generator.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Independent stream addressed by (a, b) under the given master seed.
    static RngStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
        std::uint64_t s = mix(master + 0x9E3779B97F4A7C15ULL);
        s = mix(s + 0x9E3779B97F4A7C15ULL + a);
        s = mix(s + 0x9E3779B97F4A7C15ULL + b);
        return RngStream(s);
    }

    // Child stream derived from the current state; does not advance *this.
    RngStream fork(std::uint64_t index) const {
        return substream(state_, 0x5851F42D4C957F2DULL, index);
    }

    std::uint64_t state() const { return state_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in (0, 1]: 53-bit resolution, never zero (safe under log).
    double uniform01() {
        return 1.0 - static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; second value of the pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    Eigen::VectorXd normal_vector(int dim) {
        Eigen::VectorXd z(dim);
        for (int i = 0; i < dim; ++i) z[i] = normal();
        return z;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gibbsdrift
