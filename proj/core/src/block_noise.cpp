#include "sdnloc/block_noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "sdnloc/errors.hpp"

namespace sdnloc {

BlockGrid decompose(const ImagePlane& image, std::size_t block_size) {
    if (block_size < 8) throw InputError("block size must be >= 8");
    if (image.width < block_size || image.height < block_size)
        throw InputError("image smaller than one block");
    BlockGrid g;
    g.block_size = block_size;
    g.rows = image.height / block_size;
    g.cols = image.width / block_size;
    g.image_width = image.width;
    g.image_height = image.height;
    return g;
}

namespace {

// Mean absolute 4-neighbor Laplacian inside a block, used by the
// relative flatness rule.
double block_laplacian(const ImagePlane& img, std::size_t r0, std::size_t c0, std::size_t B) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t r = r0 + 1; r + 1 < r0 + B; ++r) {
        for (std::size_t c = c0 + 1; c + 1 < c0 + B; ++c) {
            const double lap = img.at(r - 1, c) + img.at(r + 1, c) + img.at(r, c - 1) +
                               img.at(r, c + 1) - 4.0 * img.at(r, c);
            acc += std::abs(lap);
            ++n;
        }
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - t) + v[hi] * t;
}

}  // namespace

std::vector<double> block_flatness(const ImagePlane& image, const BlockGrid& grid) {
    std::vector<double> lap(grid.block_count(), 0.0);
    for (std::size_t br = 0; br < grid.rows; ++br)
        for (std::size_t bc = 0; bc < grid.cols; ++bc)
            lap[br * grid.cols + bc] =
                block_laplacian(image, br * grid.block_size, bc * grid.block_size,
                                grid.block_size);
    return lap;
}

NoiseSampleSet estimate_block_noise(const ImagePlane& image, const BlockGrid& grid,
                                    std::size_t patch_size) {
    if (patch_size >= grid.block_size) throw InputError("patch size must be < block size");
    const std::size_t B = grid.block_size;
    const std::size_t P = patch_size;
    const auto M = static_cast<Eigen::Index>(P * P);
    const std::size_t trailing = (P * P + 1) / 2;  // smallest ceil(M/2) eigenvalues

    NoiseSampleSet out;
    out.grid = grid;
    out.samples.reserve(grid.block_count());

    std::vector<double> lap(grid.block_count(), 0.0);

    for (std::size_t br = 0; br < grid.rows; ++br) {
        for (std::size_t bc = 0; bc < grid.cols; ++bc) {
            const std::size_t r0 = br * B, c0 = bc * B;
            NoiseSample s;
            s.row = br;
            s.col = bc;
            s.pixel_count = B * B;

            double mean = 0.0;
            double lo = image.at(r0, c0), hi = lo;
            for (std::size_t r = r0; r < r0 + B; ++r)
                for (std::size_t c = c0; c < c0 + B; ++c) {
                    const double v = image.at(r, c);
                    mean += v;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            mean /= static_cast<double>(B * B);
            s.mean = std::clamp(mean, 0.0, 1.0);

            if (lo == hi) {  // exactly constant block: no covariance to speak of
                s.std = 0.0;
                s.smooth = true;
                lap[br * grid.cols + bc] = 0.0;
                out.samples.push_back(s);
                continue;
            }

            // stack overlapping PxP patches as vectors, covariance eigenvalues
            const std::size_t np = (B - P + 1) * (B - P + 1);
            Eigen::MatrixXd patches(M, static_cast<Eigen::Index>(np));
            Eigen::Index k = 0;
            for (std::size_t pr = 0; pr + P <= B; ++pr) {
                for (std::size_t pc = 0; pc + P <= B; ++pc) {
                    Eigen::Index d = 0;
                    for (std::size_t rr = 0; rr < P; ++rr)
                        for (std::size_t cc = 0; cc < P; ++cc)
                            patches(d++, k) = image.at(r0 + pr + rr, c0 + pc + cc);
                    ++k;
                }
            }
            const Eigen::VectorXd mu = patches.rowwise().mean();
            patches.colwise() -= mu;
            const Eigen::MatrixXd cov =
                (patches * patches.transpose()) / static_cast<double>(np - 1);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
            if (es.info() != Eigen::Success) {
                s.std = 0.0;
                s.smooth = true;
            } else {
                const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
                double var = 0.0;
                for (std::size_t i = 0; i < trailing; ++i)
                    var += std::max(0.0, ev(static_cast<Eigen::Index>(i)));
                var /= static_cast<double>(trailing);
                s.std = std::sqrt(var);
            }

            lap[br * grid.cols + bc] = block_laplacian(image, r0, c0, B);
            out.samples.push_back(s);
        }
    }

    // Flatness compares the Laplacian response against the block's own
    // noise estimate: pure noise responds in proportion to sigma, so the
    // raw response would rank blocks by noise level rather than by scene
    // texture. The ratio is roughly constant for noise-dominated blocks
    // and large only where structure rides on top.
    std::vector<double> tnr(out.samples.size(), 0.0), stds;
    stds.reserve(out.samples.size());
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        tnr[i] = lap[i] / std::max(out.samples[i].std, 1e-12);
        stds.push_back(out.samples[i].std);
    }
    const double tnr_thresh = percentile(tnr, 0.60);
    const double med_std = percentile(stds, 0.50);

    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        auto& s = out.samples[i];
        if (s.std == 0.0)
            s.smooth = true;  // exactly constant block
        else
            s.smooth = tnr[i] <= tnr_thresh && s.std <= 3.0 * std::max(med_std, 1e-12);
    }
    return out;
}

NoiseSampleSet select_smooth(const NoiseSampleSet& samples) {
    if (samples.samples.empty()) throw InputError("empty noise sample set");
    NoiseSampleSet out;
    out.grid = samples.grid;
    for (const auto& s : samples.samples)
        if (s.smooth) out.samples.push_back(s);
    return out;
}

std::string NoiseSampleSet::to_csv() const {
    std::ostringstream os;
    os << "row,col,mean,std,k,smooth\n";
    os.precision(9);
    for (const auto& s : samples)
        os << s.row << "," << s.col << "," << s.mean << "," << s.std << "," << s.pixel_count
           << "," << (s.smooth ? 1 : 0) << "\n";
    return os.str();
}

void NoiseSampleSet::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << to_csv();
}

}  // namespace sdnloc
