#include "petident/image.hpp"

#include <algorithm>
#include <array>
#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "petident/errors.hpp"
#include "petident/random.hpp"

namespace petident {

std::optional<BoundingBox> clamp_box(const BoundingBox& box, int width, int height) noexcept {
    return intersect(box, BoundingBox{0, 0, width, height});
}

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept {
    // 64-bit edges so boxes near INT_MAX cannot overflow.
    const std::int64_t x0 = std::max<std::int64_t>(a.x, b.x);
    const std::int64_t y0 = std::max<std::int64_t>(a.y, b.y);
    const std::int64_t x1 = std::min<std::int64_t>(std::int64_t{a.x} + a.w, std::int64_t{b.x} + b.w);
    const std::int64_t y1 = std::min<std::int64_t>(std::int64_t{a.y} + a.h, std::int64_t{b.y} + b.h);
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    return BoundingBox{static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(x1 - x0),
                       static_cast<int>(y1 - y0)};
}

std::ostream& operator<<(std::ostream& os, const BoundingBox& box) {
    return os << "(x=" << box.x << ", y=" << box.y << ", w=" << box.w << ", h=" << box.h << ")";
}

std::string source_key(const std::filesystem::path& path) {
    std::error_code ec;
    auto abs = std::filesystem::weakly_canonical(std::filesystem::absolute(path), ec);
    if (ec) return std::filesystem::absolute(path).lexically_normal().string();
    return abs.string();
}

Image load_image(const std::filesystem::path& path) {
    cv::Mat bgr;
    try {
        bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw Error("cannot decode image " + path.string() + ": " + e.what());
    }
    if (bgr.empty()) throw Error("cannot read image " + path.string());

    Image out(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(x, y, 0) = row[x][2];
            out.at(x, y, 1) = row[x][1];
            out.at(x, y, 2) = row[x][0];
        }
    }
    out.source = source_key(path);
    return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
    if (image.empty()) throw Error("refusing to write empty image " + path.string());
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < image.width; ++x) {
            row[x] = cv::Vec3b(image.at(x, y, 2), image.at(x, y, 1), image.at(x, y, 0));
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), bgr, {cv::IMWRITE_PNG_COMPRESSION, 6});
    } catch (const cv::Exception& e) {
        throw Error("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok) throw Error("cannot write " + path.string());
}

Image crop(const Image& image, const BoundingBox& box) {
    if (box.empty() || !BoundingBox{0, 0, image.width, image.height}.contains(box)) {
        throw Error("crop box outside image");
    }
    Image out(box.w, box.h);
    const std::size_t row_bytes = static_cast<std::size_t>(box.w) * Image::kChannels;
    for (int y = 0; y < box.h; ++y) {
        std::memcpy(&out.pixels[out.offset(0, y)], &image.pixels[image.offset(box.x, box.y + y)],
                    row_bytes);
    }
    out.source = image.source;
    return out;
}

std::uint64_t fingerprint(const Image& image) noexcept {
    std::array<std::uint8_t, 8> dims{};
    for (int i = 0; i < 4; ++i) {
        dims[i] = static_cast<std::uint8_t>(static_cast<unsigned>(image.width) >> (8 * i));
        dims[4 + i] = static_cast<std::uint8_t>(static_cast<unsigned>(image.height) >> (8 * i));
    }
    return fnv1a64(image.pixels, fnv1a64(dims));
}

}  // namespace petident
