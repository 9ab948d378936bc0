#pragma once

#include <string>
#include <vector>

#include "sdnloc/image.hpp"

namespace sdnloc {

/// Monotone camera response curve mapping irradiance L in [0,1] to
/// recorded intensity x in [0,1]. Saturated: 0 -> 0 and 1 -> 1.
class Crf {
public:
    struct Sample {
        double irradiance;
        double intensity;
    };

    /// Validates monotonicity and saturation; throws InputError on failure.
    Crf(std::vector<Sample> samples, std::string name);

    static Crf identity(std::size_t points = 1024);
    /// Saturated parametric family f(L) = L^(1/gamma).
    static Crf gamma(double g, std::size_t points = 1024);

    /// Plain text format: header "crf <name> <count>", then <count> lines "L x".
    static Crf load(const std::string& path);
    void save(const std::string& path) const;

    /// Monotone linear interpolation of f(L); input clamped to [0,1].
    double apply(double irradiance) const;
    /// Inverse via monotone interpolation; throws InputError if the
    /// intensity lies outside the curve's range.
    double invert(double intensity) const;

    const std::string& name() const { return name_; }
    const std::vector<Sample>& samples() const { return samples_; }

private:
    std::vector<Sample> samples_;
    std::string name_;
};

/// Per-pixel f(L) over a plane of irradiances.
ImagePlane apply_crf(const Crf& crf, const ImagePlane& irradiance_plane);

}  // namespace sdnloc
