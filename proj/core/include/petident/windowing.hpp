#pragma once

// Three square windows per dog box, placed along the longer side.
//
// With S = min(w, h) and L = max(w, h) the windows are S x S and start at
// offsets 0, floor((L - S) / 2) and L - S along the long axis; the short axis
// is spanned completely. For L <= 3S the windows cover the whole box, for
// L < 3S neighbours overlap. Longer boxes leave gaps between windows but both
// ends are always covered.

#include <array>
#include <cstddef>
#include <string>

#include "petident/geometry.hpp"
#include "petident/image.hpp"

namespace petident {

inline constexpr int kDefaultInputSide = 299;
inline constexpr std::size_t kWindowCount = 3;

/// A square crop of a detection, resized to the classifier input side.
struct Window {
    BoundingBox region;  // source-image coordinates, square
    Image pixels;        // input_side x input_side RGB
    std::string source;  // Image::source of the originating image
    int ordinal = 0;     // 0 = start, 1 = middle, 2 = end
};

/// Window regions in start, middle, end order. Throws petident::Error for an empty box.
std::array<BoundingBox, kWindowCount> window_regions(const BoundingBox& box);

/// Crops each region from `image` and resizes it to input_side. `box` must lie inside the image.
std::array<Window, kWindowCount> extract_windows(const Image& image, const BoundingBox& box,
                                                 int input_side = kDefaultInputSide);

/// Bilinear resize with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& src, int width, int height);

/// Square bilinear resize of a crop.
Image resize_crop(const Image& crop, int side);

}  // namespace petident
