#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sdnloc/errors.hpp"
#include "sdnloc/image.hpp"

// File I/O and codec plumbing is delegated to OpenCV; everything else in
// the library works on the plain ImagePlane/ImageRgb buffers.

namespace sdnloc {

namespace {

ImageRgb from_mat(const cv::Mat& m) {
    cv::Mat bgr;
    if (m.channels() == 1)
        cv::cvtColor(m, bgr, cv::COLOR_GRAY2BGR);
    else if (m.channels() == 4)
        cv::cvtColor(m, bgr, cv::COLOR_BGRA2BGR);
    else
        bgr = m;

    const double scale = bgr.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
    ImageRgb out(static_cast<std::size_t>(bgr.cols), static_cast<std::size_t>(bgr.rows));
    for (int r = 0; r < bgr.rows; ++r) {
        for (int c = 0; c < bgr.cols; ++c) {
            double b, g, rr;
            if (bgr.depth() == CV_16U) {
                const auto& px = bgr.at<cv::Vec3w>(r, c);
                b = px[0] * scale; g = px[1] * scale; rr = px[2] * scale;
            } else {
                const auto& px = bgr.at<cv::Vec3b>(r, c);
                b = px[0] * scale; g = px[1] * scale; rr = px[2] * scale;
            }
            double* p = out.pixel(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            p[0] = rr; p[1] = g; p[2] = b;
        }
    }
    return out;
}

cv::Mat to_mat_8u(const ImageRgb& img) {
    cv::Mat m(static_cast<int>(img.height), static_cast<int>(img.width), CV_8UC3);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            const double* p = img.pixel(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
            auto q = [](double v) {
                return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            };
            m.at<cv::Vec3b>(r, c) = cv::Vec3b(q(p[2]), q(p[1]), q(p[0]));  // BGR
        }
    }
    return m;
}

}  // namespace

ImageRgb load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw InputError("cannot read image: " + path);
    return from_mat(m);
}

ImagePlane load_image_gray(const std::string& path) { return load_image(path).to_luminance(); }

void save_png_gray(const std::string& path, const ImagePlane& img) {
    cv::Mat m(static_cast<int>(img.height), static_cast<int>(img.width), CV_8UC1);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            m.at<unsigned char>(r, c) = static_cast<unsigned char>(
                std::lround(std::clamp(img.at(r, c), 0.0, 1.0) * 255.0));
    if (!cv::imwrite(path, m)) throw InputError("cannot write image: " + path);
}

void save_png_rgb(const std::string& path, const ImageRgb& img) {
    if (!cv::imwrite(path, to_mat_8u(img))) throw InputError("cannot write image: " + path);
}

void save_png_binary(const std::string& path, const ImagePlane& mask) {
    cv::Mat m(static_cast<int>(mask.height), static_cast<int>(mask.width), CV_8UC1);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            m.at<unsigned char>(r, c) = mask.at(r, c) != 0.0 ? 255 : 0;
    std::vector<int> flags{cv::IMWRITE_PNG_BILEVEL, 1};
    if (!cv::imwrite(path, m, flags)) throw InputError("cannot write image: " + path);
}

ImageRgb jpeg_cycle(const ImageRgb& img, int quality) {
    if (quality < 1 || quality > 100) throw InputError("JPEG quality must be in [1,100]");
    std::vector<unsigned char> buf;
    std::vector<int> flags{cv::IMWRITE_JPEG_QUALITY, quality};
    if (!cv::imencode(".jpg", to_mat_8u(img), buf, flags))
        throw InputError("JPEG encode failed");
    cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (decoded.empty()) throw InputError("JPEG decode failed");
    return from_mat(decoded);
}

ImageRgb scale_bicubic(const ImageRgb& img, double factor) {
    if (factor <= 0.0 || factor > 1.0) throw InputError("scale factor must be in (0,1]");
    const int nw = std::max(1, static_cast<int>(std::lround(img.width * factor)));
    const int nh = std::max(1, static_cast<int>(std::lround(img.height * factor)));
    cv::Mat resized;
    cv::resize(to_mat_8u(img), resized, cv::Size(nw, nh), 0, 0, cv::INTER_CUBIC);
    return from_mat(resized);
}

ImagePlane scale_nearest(const ImagePlane& img, std::size_t new_w, std::size_t new_h) {
    ImagePlane out(new_w, new_h);
    for (std::size_t r = 0; r < new_h; ++r) {
        const std::size_t sr = std::min(img.height - 1, r * img.height / new_h);
        for (std::size_t c = 0; c < new_w; ++c) {
            const std::size_t sc = std::min(img.width - 1, c * img.width / new_w);
            out.at(r, c) = img.at(sr, sc);
        }
    }
    return out;
}

}  // namespace sdnloc
