#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "petident/geometry.hpp"
#include "petident/image.hpp"

namespace petident {

struct Detection {
    BoundingBox box;
    std::string class_label;
    double confidence = 0.0;  // [0, 1]

    bool operator==(const Detection&) const = default;
};

inline constexpr double kDefaultMinConfidence = 0.5;
inline constexpr std::string_view kDogLabel = "dog";

/// Object detector plug-in. Subclasses implement do_run(); run() serializes
/// calls when concurrent() is false.
class DetectorBackend {
public:
    DetectorBackend() = default;
    // Copies and moves get a fresh, unlocked mutex.
    DetectorBackend(const DetectorBackend&) {}
    DetectorBackend& operator=(const DetectorBackend&) { return *this; }
    virtual ~DetectorBackend() = default;

    std::vector<Detection> run(const Image& image);

    virtual bool concurrent() const { return true; }
    virtual std::string name() const = 0;

protected:
    virtual std::vector<Detection> do_run(const Image& image) = 0;

private:
    std::mutex mutex_;
};

/// Runs the backend, clamps boxes to the image, drops boxes left with zero
/// area and sorts by descending confidence (stable).
std::vector<Detection> detect(const Image& image, DetectorBackend& backend);

/// Keeps `dog_label` detections at or above min_confidence, order preserved.
std::vector<Detection> filter_dogs(std::span<const Detection> detections,
                                   double min_confidence = kDefaultMinConfidence,
                                   std::string_view dog_label = kDogLabel);

/// Highest confidence; ties go to the larger box, then the earlier position.
std::optional<Detection> select_primary(std::span<const Detection> detections);

/// Replays pre-recorded detections keyed by Image::source. Unknown images yield no detections.
class ScriptedDetector final : public DetectorBackend {
public:
    ScriptedDetector() = default;
    explicit ScriptedDetector(std::map<std::string, std::vector<Detection>> table)
        : table_(std::move(table)) {}

    /// CSV with header image_path,class_label,confidence,x,y,w,h. Relative
    /// paths are resolved against the table's directory.
    static ScriptedDetector load(const std::filesystem::path& table_path);

    void add(const std::string& key, Detection detection);
    const std::map<std::string, std::vector<Detection>>& table() const noexcept { return table_; }

    std::string name() const override { return "scripted"; }

protected:
    std::vector<Detection> do_run(const Image& image) override;

private:
    std::map<std::string, std::vector<Detection>> table_;
};

void write_detection_table(const std::map<std::string, std::vector<Detection>>& table,
                           const std::filesystem::path& path);

}  // namespace petident
