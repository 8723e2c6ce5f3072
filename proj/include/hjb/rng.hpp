#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hjb {

/**
 * Seedable standard-normal source with a fully specified output sequence.
 *
 * std::mt19937_64 is pinned by the standard; std::normal_distribution is not,
 * so the transform is done here: 53-bit uniforms in (0, 1) fed to the
 * Box-Muller pair (cos branch first, sin branch cached). Independent streams
 * are obtained by offsetting the seed.
 */
class NormalRng {
public:
    static constexpr const char* identity = "mt19937_64+u53-open+box-muller-cos-sin";

    explicit NormalRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace hjb
