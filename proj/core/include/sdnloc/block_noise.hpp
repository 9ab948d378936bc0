#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdnloc/image.hpp"

namespace sdnloc {

/// Non-overlapping block lattice over an image; trailing partial blocks
/// are dropped.
struct BlockGrid {
    std::size_t block_size = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t image_width = 0;
    std::size_t image_height = 0;

    std::size_t block_count() const { return rows * cols; }
};

/// One block's noise observation: mean intensity m_n and estimated noise
/// standard deviation s_n.
struct NoiseSample {
    double mean = 0.0;
    double std = 0.0;
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t pixel_count = 0;
    bool smooth = false;
};

struct NoiseSampleSet {
    std::vector<NoiseSample> samples;
    BlockGrid grid;

    void save_csv(const std::string& path) const;
    std::string to_csv() const;
};

/// Throws InputError if the image holds less than one full block or
/// block_size < 8.
BlockGrid decompose(const ImagePlane& image, std::size_t block_size);

/// Per-block PCA noise estimate: overlapping patch_size x patch_size
/// patches inside the block are stacked as vectors; the noise variance is
/// the mean of the smallest ceil(M/2) covariance eigenvalues (M =
/// patch_size^2). Smooth flag from a relative flatness rule (Laplacian
/// response over s_n below the 60th percentile and s_n below 3x the
/// median).
NoiseSampleSet estimate_block_noise(const ImagePlane& image, const BlockGrid& grid,
                                    std::size_t patch_size = 5);

/// Subset with smooth = true; grid metadata preserved.
NoiseSampleSet select_smooth(const NoiseSampleSet& samples);

/// Mean absolute 4-neighbor Laplacian per block (texture measure behind
/// the flatness rule).
std::vector<double> block_flatness(const ImagePlane& image, const BlockGrid& grid);

}  // namespace sdnloc
