#pragma once

// Seeded flip / shift / shear / zoom augmentation of classifier windows.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "petident/dataset.hpp"
#include "petident/image.hpp"
#include "petident/windowing.hpp"

namespace petident {

enum class FillMode { nearest, reflect };

std::string_view to_string(FillMode mode);
FillMode parse_fill_mode(std::string_view text);

struct ZoomRange {
    double lo = 0.9;
    double hi = 1.1;
};

struct AugmentationSpec {
    double flip_probability = 0.5;
    double shift_fraction = 0.1;  // max |offset| per axis as a fraction of that axis
    double shear_degrees = 10.0;  // max |shear angle|
    ZoomRange zoom_range;         // > 1 magnifies (central crop), < 1 shrinks
    FillMode fill_mode = FillMode::nearest;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;

    /// No-op spec: never flips, all ranges zero, zoom fixed at 1.
    static AugmentationSpec identity(std::uint64_t seed = 0);
    /// Always flips, nothing else.
    static AugmentationSpec flip_only(std::uint64_t seed = 0);
};

/// Concrete parameters drawn for one (spec, draw_index).
struct TransformDraw {
    bool flip = false;
    double dx = 0.0;  // pixels, +x moves content right
    double dy = 0.0;
    double shear_degrees = 0.0;
    double zoom = 1.0;
};

/// Draws are consumed in a fixed order (flip, dx, dy, shear, zoom) from a
/// generator seeded with mix_seed(spec.seed, draw_index).
TransformDraw draw_transform(const AugmentationSpec& spec, std::uint64_t draw_index, int width,
                             int height);

/// Applies flip -> shift -> shear -> zoom about the image center with bilinear
/// sampling. Output has the input's dimensions.
Image apply_transform(const Image& image, const TransformDraw& draw, FillMode fill_mode);

Image augment_image(const Image& image, const AugmentationSpec& spec, std::uint64_t draw_index);

Window augment_window(const Window& window, const AugmentationSpec& spec, std::uint64_t draw_index);

struct LabeledWindow {
    Window window;
    IdentityId label;
};

enum class ExpansionMode {
    total,       // factor x input size, originals included (default)
    additional,  // originals plus `factor` variants each
};

inline constexpr int kDefaultAugmentationFactor = 16;

/// Each original is followed by its variants; variant j of item i uses draw
/// index i * variants_per_item + j. Throws std::invalid_argument for factor < 1.
std::vector<LabeledWindow> expand_dataset(std::span<const LabeledWindow> windows,
                                          const AugmentationSpec& spec,
                                          int factor = kDefaultAugmentationFactor,
                                          ExpansionMode mode = ExpansionMode::total);

/// Number of augmented variants generated per original.
int variants_per_item(int factor, ExpansionMode mode);

}  // namespace petident
