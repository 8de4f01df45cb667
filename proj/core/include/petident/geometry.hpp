#pragma once

#include <cstdint>
#include <optional>
#include <ostream>

namespace petident {

/// Axis-aligned pixel rectangle: left/top corner plus extent.
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const noexcept { return x + w; }
    int bottom() const noexcept { return y + h; }
    std::int64_t area() const noexcept {
        return w > 0 && h > 0 ? std::int64_t{w} * h : 0;
    }
    bool empty() const noexcept { return w <= 0 || h <= 0; }

    bool contains(const BoundingBox& other) const noexcept {
        return other.x >= x && other.y >= y && other.right() <= right() &&
               other.bottom() <= bottom();
    }

    bool operator==(const BoundingBox&) const = default;
};

/// Intersection with the image rectangle [0,width) x [0,height); nullopt if nothing remains.
std::optional<BoundingBox> clamp_box(const BoundingBox& box, int width, int height) noexcept;

std::optional<BoundingBox> intersect(const BoundingBox& a, const BoundingBox& b) noexcept;

std::ostream& operator<<(std::ostream& os, const BoundingBox& box);

}  // namespace petident
