#include "sdnloc/image.hpp"

#include "sdnloc/errors.hpp"

namespace sdnloc {

void ImagePlane::validate() const {
    if (values.size() != width * height) throw InputError("ImagePlane dimension mismatch");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("ImagePlane value outside [0,1]");
}

ImagePlane ImageRgb::to_luminance() const {
    ImagePlane out(width, height);
    for (std::size_t i = 0; i < width * height; ++i) {
        const double* p = &values[3 * i];
        out.values[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
    return out;
}

ImageRgb ImageRgb::from_plane(const ImagePlane& p) {
    ImageRgb out(p.width, p.height);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        out.values[3 * i] = p.values[i];
        out.values[3 * i + 1] = p.values[i];
        out.values[3 * i + 2] = p.values[i];
    }
    return out;
}

}  // namespace sdnloc
