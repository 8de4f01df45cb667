#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petident/augmentation.hpp"
#include "petident/detection.hpp"
#include "petident/identification.hpp"
#include "petident/inference.hpp"

namespace petident::cli {

enum class EvaluationProtocol { cross_validation, holdout };

/// Every tunable of the tool. Loaded from a JSON file, then overridden by flags.
struct PipelineConfig {
    // Model-file backends. classifier_model_path may contain "{fold}" for per-fold models.
    std::string detector_model_path;
    std::string detector_metadata_path;
    std::string label_map_path;
    std::string classifier_model_path;
    std::string classifier_metadata_path;
    // Scripted backends; take precedence over model files when set.
    std::string detector_table;
    std::string classifier_table;
    std::string identities_path;

    std::string dog_class{kDogLabel};
    double min_confidence = kDefaultMinConfidence;
    int input_side = kDefaultInputSide;
    VotingVariant voting_variant = VotingVariant::max_single;
    bool all_dogs = false;

    AugmentationSpec augmentation;  // seed is taken from `seed`
    int augmentation_factor = kDefaultAugmentationFactor;
    ExpansionMode augmentation_mode = ExpansionMode::total;

    std::size_t cv_k = 10;
    EvaluationProtocol protocol = EvaluationProtocol::cross_validation;
    std::size_t holdout_fold = 0;

    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    /// Throws ConfigError on unknown keys, wrong types or out-of-range values.
    /// Relative paths are resolved against `base_dir`.
    static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);

    /// Full resolved configuration, echoed into every output document.
    nlohmann::json to_json() const;

    /// Throws ConfigError if a field is out of range.
    void validate() const;

    IdentifyConfig identify_config() const;
    AugmentationSpec augmentation_spec() const;
};

/// Scripted detector if detector_table is set, otherwise the ONNX detector.
/// Throws BackendError / ConfigError.
std::unique_ptr<DetectorBackend> make_detector(const PipelineConfig& config);

/// Mock classifier if classifier_table is set, otherwise the ONNX classifier
/// (with "{fold}" replaced by `fold` when given). `fallback_ids` names the
/// classes when the config has no identities file.
std::unique_ptr<ClassifierBackend> make_classifier(const PipelineConfig& config,
                                                   const std::vector<IdentityId>& fallback_ids = {},
                                                   std::optional<std::size_t> fold = std::nullopt);

}  // namespace petident::cli
