#pragma once

#include <cmath>
#include <cstdint>

namespace kpo {

// Name recorded in output metadata; bump when the stream layout changes.
inline constexpr const char* kRngAlgorithm = "splitmix64-substream-v1/box-muller";

// splitmix64 (Steele, Lea, Flood 2014). Chosen over std::mt19937 because the
// stream is trivially reproducible from any language given the seed.
class Splitmix64 {
public:
    explicit Splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]: 53-bit mantissa, zero mapped up to 2^-53.
    double next_unit() {
        const std::uint64_t bits = next_u64() >> 11;
        const double u = static_cast<double>(bits) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Independent substream for (seed, index); lets ensemble members run in any
// order or on any thread while producing identical draws.
inline Splitmix64 substream(std::uint64_t seed, std::uint64_t index) {
    Splitmix64 mixer(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
    return Splitmix64(mixer.next_u64());
}

// Standard normal variates by Box-Muller on splitmix64 uniforms.
class GaussianDraw {
public:
    explicit GaussianDraw(Splitmix64 gen) : gen_(gen) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = gen_.next_unit();
        const double u2 = gen_.next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    Splitmix64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace kpo
