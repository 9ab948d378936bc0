#pragma once

#include <cmath>
#include <cstdint>

namespace sdnloc {

/// Seedable 64-bit generator (splitmix64) with a Box-Muller normal
/// transform. Fully specified here so results are bit-identical across
/// platforms; the algorithm identifier is recorded in run outputs.
class Rng {
public:
    static constexpr const char* kAlgorithm = "splitmix64-boxmuller";

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1), 53-bit resolution.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw via Box-Muller; pairs are cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        // avoid log(0)
        while (u1 <= 0.0) u1 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Derives an independent stream, e.g. one per image column.
    Rng fork(std::uint64_t stream_id) const {
        Rng child(state_ ^ (0x632be59bd9b4e019ULL * (stream_id + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sdnloc
