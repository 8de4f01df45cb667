#pragma once

// Synthetic datasets for tests and demos: drawn "dog" images, scripted
// detections and scripted per-window classifier scores.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "petident/dataset.hpp"
#include "petident/detection.hpp"
#include "petident/inference.hpp"

namespace petident {

struct FixtureOptions {
    std::size_t num_identities = 16;
    std::size_t images_per_identity = 5;
    std::uint64_t seed = 0;
    // Fraction of images whose scripted scores make the true identity win the vote.
    double correct_fraction = 1.0;
    // When set, every window's argmax is this class (a constant predictor).
    std::optional<std::size_t> constant_class;
    // Images scripted without any dog detection. They are never scripted-correct.
    std::size_t no_detection_images = 0;
    int min_side = 96;
    int max_side = 160;
};

struct FixtureImage {
    std::string path;  // relative, e.g. "images/dog_03_1.png"
    IdentityId identity;
    Image image;
    std::vector<Detection> detections;
    std::array<std::vector<double>, kWindowCount> window_scores;  // for the primary dog
    bool has_dog = true;
    bool scripted_correct = true;
};

struct FixtureSet {
    std::vector<IdentityId> identities;
    std::vector<FixtureImage> images;
    DatasetManifest manifest;

    std::size_t scripted_correct() const;

    /// Backends keyed by FixtureImage::path, for in-memory use (Image::source == path).
    ScriptedDetector detector() const;
    MockClassifier classifier(int input_side = kDefaultInputSide) const;
};

/// Deterministic in every field for a given options value. Throws
/// std::invalid_argument for num_identities < 2, images_per_identity < 1,
/// correct_fraction outside [0,1] or too many no-detection images.
FixtureSet generate_fixture_set(const FixtureOptions& options);

struct FixturePaths {
    std::filesystem::path manifest;    // manifest.csv
    std::filesystem::path detections;  // detections.csv
    std::filesystem::path scores;      // scores.csv
    std::filesystem::path identities;  // identities.txt
};

/// Writes images/ and the four tables under `dir` (created if needed).
FixturePaths write_fixture_set(const FixtureSet& set, const std::filesystem::path& dir);

}  // namespace petident
