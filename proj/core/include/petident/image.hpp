#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "petident/geometry.hpp"

namespace petident {

/// 8-bit RGB raster, row-major, channels interleaved.
struct Image {
    static constexpr int kChannels = 3;

    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    // Lookup key for scripted backends; load_image() sets it to the canonical path.
    std::string source;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels, fill) {}

    bool empty() const noexcept { return width <= 0 || height <= 0 || pixels.empty(); }

    std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)) * kChannels;
    }
    std::uint8_t& at(int x, int y, int c) noexcept { return pixels[offset(x, y) + c]; }
    std::uint8_t at(int x, int y, int c) const noexcept { return pixels[offset(x, y) + c]; }

    /// Pixel equality; `source` is metadata and not compared.
    bool same_pixels(const Image& other) const noexcept {
        return width == other.width && height == other.height && pixels == other.pixels;
    }
};

/// Normalized key used to match images against scripted fixture tables.
std::string source_key(const std::filesystem::path& path);

/// Decodes any raster format OpenCV understands. Throws petident::Error naming the path.
Image load_image(const std::filesystem::path& path);

/// Lossless PNG. Throws petident::Error on I/O failure.
void save_png(const Image& image, const std::filesystem::path& path);

/// Copies the pixels under `box`, which must lie inside the image.
Image crop(const Image& image, const BoundingBox& box);

/// FNV-1a over dimensions and pixel bytes.
std::uint64_t fingerprint(const Image& image) noexcept;

}  // namespace petident
