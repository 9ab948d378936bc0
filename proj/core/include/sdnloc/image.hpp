#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sdnloc {

/// Grayscale intensity plane, row-major, values in [0,1].
struct ImagePlane {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    ImagePlane() = default;
    ImagePlane(std::size_t w, std::size_t h, double fill = 0.0)
        : width(w), height(h), values(w * h, fill) {}

    double& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
    std::size_t pixel_count() const { return width * height; }

    /// Throws InputError unless all values lie in [0,1] and dims match.
    void validate() const;
};

/// Interleaved RGB, values in [0,1].
struct ImageRgb {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;  // r,g,b per pixel

    ImageRgb() = default;
    ImageRgb(std::size_t w, std::size_t h) : width(w), height(h), values(3 * w * h, 0.0) {}

    double* pixel(std::size_t row, std::size_t col) { return &values[3 * (row * width + col)]; }
    const double* pixel(std::size_t row, std::size_t col) const {
        return &values[3 * (row * width + col)];
    }

    /// ITU-R 601 luminance.
    ImagePlane to_luminance() const;
    static ImageRgb from_plane(const ImagePlane& p);
};

// --- image_io.cpp ---

/// Loads 8/16-bit grayscale or color PNG/PPM/PGM; normalizes to [0,1].
ImageRgb load_image(const std::string& path);
ImagePlane load_image_gray(const std::string& path);

void save_png_gray(const std::string& path, const ImagePlane& img);
void save_png_rgb(const std::string& path, const ImageRgb& img);
/// 1-bit PNG; nonzero values map to white.
void save_png_binary(const std::string& path, const ImagePlane& mask);

/// Round-trips through a baseline JPEG encoder at the given quality (1..100).
ImageRgb jpeg_cycle(const ImageRgb& img, int quality);
/// Bicubic resample to (round(w*factor), round(h*factor)).
ImageRgb scale_bicubic(const ImageRgb& img, double factor);
/// Nearest-neighbor resample, for ground-truth masks.
ImagePlane scale_nearest(const ImagePlane& img, std::size_t new_w, std::size_t new_h);

}  // namespace sdnloc
