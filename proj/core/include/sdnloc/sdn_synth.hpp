#pragma once

#include <cstdint>
#include <vector>

#include "sdnloc/crf.hpp"
#include "sdnloc/image.hpp"
#include "sdnloc/nlf.hpp"

namespace sdnloc {

/// Noise model parameters: n_s ~ N(0, L*sigma_s^2) in the irradiance
/// domain plus independent n_c ~ N(0, sigma_c^2).
struct NoiseParams {
    double sigma_s = 0.0;
    double sigma_c = 0.0;
};

/// Goodness-of-fit of a per-intensity noise histogram against a Gaussian.
struct GaussianFitReport {
    double intensity = 0.0;
    std::size_t sample_count = 0;
    double rmse = 0.0;
    double r_square = 0.0;
    double skewness = 0.0;  // reported, not gated
};

/// Sensor simulation: per pixel L = f^-1(x), draw n_s and n_c, then
/// y = f(clamp(L + n_s + n_c, 0, 1)). Deterministic for a fixed seed;
/// columns use independently derived streams.
ImagePlane synthesize_noisy(const ImagePlane& clean, const Crf& crf, const NoiseParams& params,
                            std::uint64_t seed);

/// Horizontal ramp test pattern: column j has intensity j/(width-1).
ImagePlane make_gradient_pattern(std::size_t width, std::size_t height);

/// Histograms the noisy values of pixels whose clean value matches
/// `intensity` within 1/(2*bin_count) and least-squares fits a Gaussian
/// to the peak-normalized bin frequencies.
GaussianFitReport fit_gaussian_at_intensity(const ImagePlane& noisy, const ImagePlane& clean,
                                            double intensity, std::size_t bin_count = 64);

/// Monte-Carlo estimate of sigma(x) = sqrt(E(y-x)^2) per grid intensity.
Nlf nlf_ground_truth(const Crf& crf, const NoiseParams& params,
                     const std::vector<double>& intensity_grid, std::size_t mc_draws,
                     std::uint64_t seed);

}  // namespace sdnloc
