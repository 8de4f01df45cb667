#include "petident/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "petident/errors.hpp"

namespace petident {

std::array<BoundingBox, kWindowCount> window_regions(const BoundingBox& box) {
    if (box.empty()) throw Error("window_regions: zero-area box");
    const int side = std::min(box.w, box.h);
    const int slack = std::max(box.w, box.h) - side;
    const std::array<int, kWindowCount> offsets{0, slack / 2, slack};

    std::array<BoundingBox, kWindowCount> regions;
    const bool horizontal = box.w >= box.h;
    for (std::size_t i = 0; i < kWindowCount; ++i) {
        regions[i] = horizontal ? BoundingBox{box.x + offsets[i], box.y, side, side}
                                : BoundingBox{box.x, box.y + offsets[i], side, side};
    }
    return regions;
}

std::array<Window, kWindowCount> extract_windows(const Image& image, const BoundingBox& box,
                                                 int input_side) {
    if (input_side < 1) throw Error("extract_windows: input_side must be positive");
    if (!BoundingBox{0, 0, image.width, image.height}.contains(box)) {
        throw Error("extract_windows: box not inside image");
    }
    const auto regions = window_regions(box);
    std::array<Window, kWindowCount> windows;
    for (std::size_t i = 0; i < kWindowCount; ++i) {
        windows[i].region = regions[i];
        windows[i].pixels = resize_crop(crop(image, regions[i]), input_side);
        windows[i].source = image.source;
        windows[i].ordinal = static_cast<int>(i);
    }
    return windows;
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac;
};

// Source taps for each destination index along one axis.
std::vector<Tap> axis_taps(int src_len, int dst_len) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst_len));
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int d = 0; d < dst_len; ++d) {
        double s = (d + 0.5) * scale - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
        const int lo = static_cast<int>(std::floor(s));
        const int hi = std::min(lo + 1, src_len - 1);
        taps[static_cast<std::size_t>(d)] = {lo, hi, s - lo};
    }
    return taps;
}

}  // namespace

Image resize_bilinear(const Image& src, int width, int height) {
    if (src.empty()) throw Error("resize: empty source");
    if (width < 1 || height < 1) throw Error("resize: target size must be positive");
    if (src.width == width && src.height == height) {
        Image copy = src;
        return copy;
    }
    const auto xs = axis_taps(src.width, width);
    const auto ys = axis_taps(src.height, height);
    Image out(width, height);
    out.source = src.source;
    for (int y = 0; y < height; ++y) {
        const auto& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < width; ++x) {
            const auto& tx = xs[static_cast<std::size_t>(x)];
            for (int c = 0; c < Image::kChannels; ++c) {
                const double top = src.at(tx.lo, ty.lo, c) * (1.0 - tx.frac) + src.at(tx.hi, ty.lo, c) * tx.frac;
                const double bot = src.at(tx.lo, ty.hi, c) * (1.0 - tx.frac) + src.at(tx.hi, ty.hi, c) * tx.frac;
                const double v = top * (1.0 - ty.frac) + bot * ty.frac;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
            }
        }
    }
    return out;
}

Image resize_crop(const Image& crop, int side) {
    return resize_bilinear(crop, side, side);
}

}  // namespace petident
