#include "sdnloc/crf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdnloc/errors.hpp"

namespace sdnloc {

namespace {

constexpr double kSaturationTol = 1e-6;

double interp(double q, double x0, double x1, double y0, double y1) {
    if (x1 <= x0) return y0;
    const double t = (q - x0) / (x1 - x0);
    return y0 + t * (y1 - y0);
}

}  // namespace

Crf::Crf(std::vector<Sample> samples, std::string name)
    : samples_(std::move(samples)), name_(std::move(name)) {
    if (samples_.size() < 2) throw InputError("CRF needs at least 2 samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (s.irradiance < 0.0 || s.irradiance > 1.0 || s.intensity < 0.0 || s.intensity > 1.0)
            throw InputError("CRF sample outside [0,1]");
        if (i > 0) {
            if (samples_[i - 1].irradiance >= s.irradiance)
                throw InputError("CRF irradiances must be strictly increasing");
            if (samples_[i - 1].intensity > s.intensity)
                throw InputError("CRF intensities must be non-decreasing");
        }
    }
    if (std::abs(samples_.front().irradiance) > kSaturationTol ||
        std::abs(samples_.front().intensity) > kSaturationTol ||
        std::abs(samples_.back().irradiance - 1.0) > kSaturationTol ||
        std::abs(samples_.back().intensity - 1.0) > kSaturationTol)
        throw InputError("CRF must be saturated: 0->0 and 1->1");
}

Crf Crf::identity(std::size_t points) { return gamma(1.0, points); }

Crf Crf::gamma(double g, std::size_t points) {
    if (g <= 0.0) throw InputError("gamma must be positive");
    std::vector<Sample> s;
    s.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double L = static_cast<double>(i) / static_cast<double>(points - 1);
        s.push_back({L, std::pow(L, 1.0 / g)});
    }
    s.front() = {0.0, 0.0};
    s.back() = {1.0, 1.0};
    std::ostringstream name;
    name << "gamma:" << g;
    return Crf(std::move(s), name.str());
}

Crf Crf::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CRF file: " + path);
    std::string tag, name;
    std::size_t count = 0;
    if (!(in >> tag >> name >> count) || tag != "crf")
        throw InputError("bad CRF header in " + path);
    std::vector<Sample> s;
    s.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double L, x;
        if (!(in >> L >> x)) throw InputError("truncated CRF file: " + path);
        s.push_back({L, x});
    }
    return Crf(std::move(s), name);
}

void Crf::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write CRF file: " + path);
    out << "crf " << name_ << " " << samples_.size() << "\n";
    out.precision(12);
    for (const auto& s : samples_) out << s.irradiance << " " << s.intensity << "\n";
}

double Crf::apply(double irradiance) const {
    const double L = std::clamp(irradiance, 0.0, 1.0);
    auto it = std::lower_bound(samples_.begin(), samples_.end(), L,
                               [](const Sample& s, double q) { return s.irradiance < q; });
    if (it == samples_.begin()) return samples_.front().intensity;
    if (it == samples_.end()) return samples_.back().intensity;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double y = interp(L, lo.irradiance, hi.irradiance, lo.intensity, hi.intensity);
    return std::clamp(y, 0.0, 1.0);
}

double Crf::invert(double intensity) const {
    if (intensity < samples_.front().intensity - kSaturationTol ||
        intensity > samples_.back().intensity + kSaturationTol)
        throw InputError("intensity outside CRF range");
    const double x = std::clamp(intensity, samples_.front().intensity, samples_.back().intensity);
    // first segment whose upper intensity reaches x
    auto it = std::lower_bound(samples_.begin(), samples_.end(), x,
                               [](const Sample& s, double q) { return s.intensity < q; });
    if (it == samples_.begin()) return samples_.front().irradiance;
    if (it == samples_.end()) return samples_.back().irradiance;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (hi.intensity <= lo.intensity) return lo.irradiance;  // flat segment
    return interp(x, lo.intensity, hi.intensity, lo.irradiance, hi.irradiance);
}

ImagePlane apply_crf(const Crf& crf, const ImagePlane& irradiance_plane) {
    ImagePlane out(irradiance_plane.width, irradiance_plane.height);
    for (std::size_t i = 0; i < irradiance_plane.values.size(); ++i)
        out.values[i] = crf.apply(irradiance_plane.values[i]);
    return out;
}

}  // namespace sdnloc
