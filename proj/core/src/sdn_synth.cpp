#include "sdnloc/sdn_synth.hpp"

#include <algorithm>
#include <cmath>

#include "sdnloc/errors.hpp"
#include "sdnloc/rng.hpp"

namespace sdnloc {

ImagePlane synthesize_noisy(const ImagePlane& clean, const Crf& crf, const NoiseParams& params,
                            std::uint64_t seed) {
    if (params.sigma_s < 0.0 || params.sigma_c < 0.0)
        throw InputError("noise sigmas must be non-negative");
    ImagePlane out(clean.width, clean.height);
    if (params.sigma_s == 0.0 && params.sigma_c == 0.0) {
        out.values = clean.values;
        return out;
    }
    const Rng base(seed);
    // per-column streams keep results independent of any internal schedule
    for (std::size_t col = 0; col < clean.width; ++col) {
        Rng rng = base.fork(col);
        for (std::size_t row = 0; row < clean.height; ++row) {
            const double x = clean.at(row, col);
            const double L = crf.invert(x);
            const double ns = params.sigma_s * std::sqrt(std::max(L, 0.0)) * rng.next_normal();
            const double nc = params.sigma_c * rng.next_normal();
            out.at(row, col) = crf.apply(std::clamp(L + ns + nc, 0.0, 1.0));
        }
    }
    return out;
}

ImagePlane make_gradient_pattern(std::size_t width, std::size_t height) {
    if (width < 2) throw InputError("gradient pattern needs width >= 2");
    ImagePlane out(width, height);
    for (std::size_t col = 0; col < width; ++col) {
        const double v = static_cast<double>(col) / static_cast<double>(width - 1);
        for (std::size_t row = 0; row < height; ++row) out.at(row, col) = v;
    }
    return out;
}

GaussianFitReport fit_gaussian_at_intensity(const ImagePlane& noisy, const ImagePlane& clean,
                                            double intensity, std::size_t bin_count) {
    if (bin_count < 4) throw InputError("bin_count too small");
    if (noisy.values.size() != clean.values.size()) throw InputError("plane size mismatch");

    const double tol = 1.0 / (2.0 * static_cast<double>(bin_count));
    std::vector<double> sel;
    for (std::size_t i = 0; i < clean.values.size(); ++i)
        if (std::abs(clean.values[i] - intensity) <= tol) sel.push_back(noisy.values[i]);

    if (sel.size() < 100)
        throw InsufficientDataError("too few pixels at requested intensity", sel.size());

    const auto [mn_it, mx_it] = std::minmax_element(sel.begin(), sel.end());
    const double lo = *mn_it, hi = *mx_it;
    if (hi - lo < 1e-12)
        throw InsufficientDataError("degenerate fit: samples have no spread", sel.size());

    // histogram over the observed range, frequencies normalized to peak 1
    std::vector<double> freq(bin_count, 0.0);
    const double bin_w = (hi - lo) / static_cast<double>(bin_count);
    for (double v : sel) {
        auto b = static_cast<std::size_t>((v - lo) / bin_w);
        if (b >= bin_count) b = bin_count - 1;
        freq[b] += 1.0;
    }
    const double peak = *std::max_element(freq.begin(), freq.end());
    for (double& f : freq) f /= peak;

    // sample moments initialize the Gaussian, refined by Gauss-Newton
    double mean = 0.0;
    for (double v : sel) mean += v;
    mean /= static_cast<double>(sel.size());
    double var = 0.0, skew = 0.0;
    for (double v : sel) {
        const double d = v - mean;
        var += d * d;
        skew += d * d * d;
    }
    var /= static_cast<double>(sel.size());
    const double sd = std::sqrt(var);
    skew = sd > 0.0 ? (skew / static_cast<double>(sel.size())) / (sd * sd * sd) : 0.0;

    std::vector<double> centers(bin_count);
    for (std::size_t b = 0; b < bin_count; ++b)
        centers[b] = lo + (static_cast<double>(b) + 0.5) * bin_w;

    double a = 1.0, mu = mean, sig = sd;
    for (int iter = 0; iter < 50; ++iter) {
        double jtj[3][3] = {};
        double jtr[3] = {};
        for (std::size_t b = 0; b < bin_count; ++b) {
            const double z = (centers[b] - mu) / sig;
            const double e = std::exp(-0.5 * z * z);
            const double model = a * e;
            const double r = freq[b] - model;
            const double da = e;
            const double dmu = a * e * z / sig;
            const double dsig = a * e * z * z / sig;
            const double j[3] = {da, dmu, dsig};
            for (int p = 0; p < 3; ++p) {
                jtr[p] += j[p] * r;
                for (int q = 0; q < 3; ++q) jtj[p][q] += j[p] * j[q];
            }
        }
        for (int p = 0; p < 3; ++p) jtj[p][p] += 1e-9;
        // solve 3x3 by Cramer
        const double det = jtj[0][0] * (jtj[1][1] * jtj[2][2] - jtj[1][2] * jtj[2][1]) -
                           jtj[0][1] * (jtj[1][0] * jtj[2][2] - jtj[1][2] * jtj[2][0]) +
                           jtj[0][2] * (jtj[1][0] * jtj[2][1] - jtj[1][1] * jtj[2][0]);
        if (std::abs(det) < 1e-30) break;
        auto solve_col = [&](int col) {
            double m[3][3];
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q) m[p][q] = (q == col) ? jtr[p] : jtj[p][q];
            return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                    m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
                   det;
        };
        const double step_a = solve_col(0);
        const double step_mu = solve_col(1);
        const double step_sig = solve_col(2);
        a += step_a;
        mu += step_mu;
        sig += step_sig;
        if (sig < 1e-9) sig = 1e-9;
        if (std::abs(step_a) + std::abs(step_mu) + std::abs(step_sig) < 1e-12) break;
    }

    double ss_res = 0.0, ss_tot = 0.0, fbar = 0.0;
    for (double f : freq) fbar += f;
    fbar /= static_cast<double>(bin_count);
    for (std::size_t b = 0; b < bin_count; ++b) {
        const double z = (centers[b] - mu) / sig;
        const double r = freq[b] - a * std::exp(-0.5 * z * z);
        ss_res += r * r;
        ss_tot += (freq[b] - fbar) * (freq[b] - fbar);
    }

    GaussianFitReport rep;
    rep.intensity = intensity;
    rep.sample_count = sel.size();
    rep.rmse = std::sqrt(ss_res / static_cast<double>(bin_count));
    rep.r_square = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    rep.skewness = skew;
    return rep;
}

Nlf nlf_ground_truth(const Crf& crf, const NoiseParams& params,
                     const std::vector<double>& intensity_grid, std::size_t mc_draws,
                     std::uint64_t seed) {
    if (mc_draws < 10000) throw InputError("nlf_ground_truth needs mc_draws >= 1e4");
    if (intensity_grid.size() != Nlf::kGridSize)
        throw InputError("intensity grid must have 256 points");
    std::vector<double> sigma(Nlf::kGridSize, 0.0);
    const Rng base(seed);
    for (std::size_t i = 0; i < intensity_grid.size(); ++i) {
        const double x = intensity_grid[i];
        const double L = crf.invert(x);
        const double s_dep = params.sigma_s * std::sqrt(std::max(L, 0.0));
        if (params.sigma_s == 0.0 && params.sigma_c == 0.0) continue;
        Rng rng = base.fork(i);
        double acc = 0.0;
        for (std::size_t d = 0; d < mc_draws; ++d) {
            const double n = s_dep * rng.next_normal() + params.sigma_c * rng.next_normal();
            const double y = crf.apply(std::clamp(L + n, 0.0, 1.0));
            acc += (y - x) * (y - x);
        }
        sigma[i] = std::sqrt(acc / static_cast<double>(mc_draws));
    }
    return Nlf(std::move(sigma));
}

}  // namespace sdnloc
