#pragma once

// k-fold evaluation of the full identify pipeline.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petident/dataset.hpp"
#include "petident/identification.hpp"

namespace petident {

inline constexpr std::string_view kReportSchema = "petident-report/1";

/// Fraction of positions where prediction == truth. Throws std::invalid_argument
/// on empty input or a length mismatch.
double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> truths);

struct ImageRecord {
    ImageRecord(std::string path, IdentityId truth_id, std::size_t truth_class, std::size_t fold_index)
        : image_path(std::move(path)), truth(std::move(truth_id)), truth_index(truth_class), fold(fold_index) {}

    std::string image_path;
    IdentityId truth;
    std::size_t truth_index = 0;
    std::size_t fold = 0;
    std::optional<std::size_t> prediction;
    std::optional<DecisionRule> decision_rule;
    double confidence = 0.0;
    std::string reason;  // why there is no prediction, e.g. "no_dog_detected"
    std::size_t correct_windows = 0;

    bool correct() const noexcept { return prediction && *prediction == truth_index; }
    bool operator==(const ImageRecord&) const = default;
};

struct EvaluationReport {
    std::vector<IdentityId> identities;
    std::size_t k = 0;
    std::vector<std::size_t> fold_counts;      // held-out entries per fold, all k folds
    std::vector<std::size_t> evaluated_folds;  // folds with at least one entry
    std::vector<double> per_fold_accuracy;     // aligned with evaluated_folds
    double mean_accuracy = 0.0;                // unweighted mean of per_fold_accuracy
    double overall_accuracy = 0.0;             // correct / evaluated entries
    double window_accuracy = 0.0;              // per-window argmax hits over identified images
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
    std::vector<std::size_t> no_detection;             // unidentified images per truth class
    std::vector<ImageRecord> records;                  // evaluated entries, manifest order
    nlohmann::json config_echo = nlohmann::json::object();

    std::size_t total() const;
    bool operator==(const EvaluationReport&) const = default;
};

/// Returns the classifier for one fold given the indices of its training entries.
using ClassifierFactory =
    std::function<std::shared_ptr<ClassifierBackend>(std::size_t fold, std::span<const std::size_t> training)>;
using ImageLoader = std::function<Image(const std::filesystem::path&)>;

struct EvaluationOptions {
    IdentifyConfig identify;
    std::size_t jobs = 1;
    nlohmann::json config_echo = nlohmann::json::object();
    ImageLoader loader;  // defaults to load_image
    // Evaluate only this held-out fold (single train/test split) instead of all k.
    std::optional<std::size_t> single_fold;
};

/// Holds out each fold in turn and identifies every held-out image with the
/// fold's classifier. Images with no dog count as errors and are tallied in
/// no_detection. Throws ManifestError if `folds` does not partition
/// `manifest`, and Error if a classifier's classes disagree with the registry.
EvaluationReport evaluate(const DatasetManifest& manifest, const FoldAssignment& folds,
                          DetectorBackend& detector, const ClassifierFactory& factory,
                          const EvaluationOptions& options = {});

nlohmann::json to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

void write_report(const EvaluationReport& report, const std::filesystem::path& path);
EvaluationReport read_report(const std::filesystem::path& path);

}  // namespace petident
