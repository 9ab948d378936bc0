#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace sdnloc {

/// Noise level function: sigma(x) sampled at 256 uniform intensities in
/// [0,1]. Values are non-negative and finite.
class Nlf {
public:
    static constexpr std::size_t kGridSize = 256;

    Nlf() : values_(kGridSize, 0.0) {}
    explicit Nlf(std::vector<double> values);

    /// Nearest grid point: index = round(intensity * 255).
    static std::size_t grid_index(double intensity);
    double at_intensity(double intensity) const { return values_[grid_index(intensity)]; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    void save_csv(const std::string& path) const;

private:
    std::vector<double> values_;
};

}  // namespace sdnloc
