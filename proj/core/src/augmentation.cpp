#include "petident/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "petident/random.hpp"

namespace petident {

std::string_view to_string(FillMode mode) {
    return mode == FillMode::nearest ? "nearest" : "reflect";
}

FillMode parse_fill_mode(std::string_view text) {
    if (text == "nearest") return FillMode::nearest;
    if (text == "reflect") return FillMode::reflect;
    throw std::invalid_argument("unknown fill_mode '" + std::string(text) + "'");
}

void AugmentationSpec::validate() const {
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
        throw std::invalid_argument("flip_probability must be in [0,1]");
    }
    if (!(shift_fraction >= 0.0)) throw std::invalid_argument("shift_fraction must be >= 0");
    if (!(shear_degrees >= 0.0 && shear_degrees < 90.0)) {
        throw std::invalid_argument("shear_degrees must be in [0,90)");
    }
    if (!(zoom_range.lo > 0.0)) throw std::invalid_argument("zoom_range lower bound must be > 0");
    if (!(zoom_range.lo <= zoom_range.hi)) throw std::invalid_argument("zoom_range must satisfy lo <= hi");
}

AugmentationSpec AugmentationSpec::identity(std::uint64_t seed) {
    return {0.0, 0.0, 0.0, {1.0, 1.0}, FillMode::nearest, seed};
}

AugmentationSpec AugmentationSpec::flip_only(std::uint64_t seed) {
    return {1.0, 0.0, 0.0, {1.0, 1.0}, FillMode::nearest, seed};
}

TransformDraw draw_transform(const AugmentationSpec& spec, std::uint64_t draw_index, int width,
                             int height) {
    spec.validate();
    DeterministicRng rng(mix_seed(spec.seed, draw_index));
    TransformDraw d;
    d.flip = rng.uniform01() < spec.flip_probability;
    const double max_dx = spec.shift_fraction * width;
    const double max_dy = spec.shift_fraction * height;
    d.dx = rng.uniform(-max_dx, max_dx);
    d.dy = rng.uniform(-max_dy, max_dy);
    d.shear_degrees = rng.uniform(-spec.shear_degrees, spec.shear_degrees);
    d.zoom = rng.uniform(spec.zoom_range.lo, spec.zoom_range.hi);
    return d;
}

namespace {

int fill_index(int i, int n, FillMode mode) {
    if (i >= 0 && i < n) return i;
    if (mode == FillMode::nearest) return std::clamp(i, 0, n - 1);
    // Half-sample symmetric: d c b a | a b c d | d c b a
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

}  // namespace

Image apply_transform(const Image& image, const TransformDraw& draw, FillMode fill_mode) {
    const int w = image.width;
    const int h = image.height;
    Image out(w, h);
    out.source = image.source;
    const double cx = (w - 1) / 2.0;
    const double cy = (h - 1) / 2.0;
    const double shear = std::tan(draw.shear_degrees * std::numbers::pi / 180.0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Invert zoom, shear, shift, flip in that order.
            double sx = cx + (x - cx) / draw.zoom;
            double sy = cy + (y - cy) / draw.zoom;
            sx -= shear * (sy - cy);
            sx -= draw.dx;
            sy -= draw.dy;
            if (draw.flip) sx = (w - 1) - sx;

            const double fx0 = std::floor(sx);
            const double fy0 = std::floor(sy);
            const double ax = sx - fx0;
            const double ay = sy - fy0;
            const int x0 = fill_index(static_cast<int>(fx0), w, fill_mode);
            const int x1 = fill_index(static_cast<int>(fx0) + 1, w, fill_mode);
            const int y0 = fill_index(static_cast<int>(fy0), h, fill_mode);
            const int y1 = fill_index(static_cast<int>(fy0) + 1, h, fill_mode);
            for (int c = 0; c < Image::kChannels; ++c) {
                const double top = image.at(x0, y0, c) * (1.0 - ax) + image.at(x1, y0, c) * ax;
                const double bot = image.at(x0, y1, c) * (1.0 - ax) + image.at(x1, y1, c) * ax;
                const double v = top * (1.0 - ay) + bot * ay;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
            }
        }
    }
    return out;
}

Image augment_image(const Image& image, const AugmentationSpec& spec, std::uint64_t draw_index) {
    if (image.empty()) throw std::invalid_argument("augment: empty image");
    return apply_transform(image, draw_transform(spec, draw_index, image.width, image.height),
                           spec.fill_mode);
}

Window augment_window(const Window& window, const AugmentationSpec& spec, std::uint64_t draw_index) {
    Window out = window;
    out.pixels = augment_image(window.pixels, spec, draw_index);
    return out;
}

int variants_per_item(int factor, ExpansionMode mode) {
    if (factor < 1) throw std::invalid_argument("augmentation factor must be >= 1");
    return mode == ExpansionMode::total ? factor - 1 : factor;
}

std::vector<LabeledWindow> expand_dataset(std::span<const LabeledWindow> windows,
                                          const AugmentationSpec& spec, int factor,
                                          ExpansionMode mode) {
    const int variants = variants_per_item(factor, mode);
    spec.validate();
    std::vector<LabeledWindow> out;
    out.reserve(windows.size() * static_cast<std::size_t>(variants + 1));
    for (std::size_t i = 0; i < windows.size(); ++i) {
        out.push_back(windows[i]);
        for (int j = 1; j <= variants; ++j) {
            const auto draw_index = i * static_cast<std::uint64_t>(variants) + static_cast<std::uint64_t>(j);
            out.push_back({augment_window(windows[i].window, spec, draw_index), windows[i].label});
        }
    }
    return out;
}

}  // namespace petident
