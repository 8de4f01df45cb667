#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "petident/dataset.hpp"
#include "petident/detection.hpp"
#include "petident/inference.hpp"
#include "petident/windowing.hpp"

namespace petident {

enum class DecisionRule { majority, strongest_activation };

/// How a three-way disagreement is resolved.
enum class VotingVariant {
    max_single,  // window label owning the single largest activation
    sum_scores,  // window label with the largest score summed over all windows
};

std::string_view to_string(DecisionRule rule);
std::string_view to_string(VotingVariant variant);
DecisionRule parse_decision_rule(std::string_view text);
VotingVariant parse_voting_variant(std::string_view text);

struct IdentityPrediction {
    IdentityId identity{"class_0"};
    std::size_t class_index = 0;
    double confidence = 0.0;  // mean winning-class score over the three windows
    std::array<std::size_t, kWindowCount> window_labels{};
    std::array<ScoreVector, kWindowCount> window_scores;
    DecisionRule decision_rule = DecisionRule::majority;
    std::optional<Detection> detection;
};

/// Fuses three window score vectors.
///
/// Each window votes for its argmax (ties to the lowest class). A label with at
/// least two votes wins outright. Otherwise, under max_single, the window whose
/// top score is largest decides (ties to the earlier window); under sum_scores
/// the window label with the largest summed score decides (ties to the earlier
/// window). `identities`, when it has K entries, names the winning class;
/// otherwise the name is "class_<index>".
///
/// Throws InferenceError unless there are exactly three vectors of one length K >= 1.
IdentityPrediction vote(std::span<const ScoreVector> scores,
                        VotingVariant variant = VotingVariant::max_single,
                        std::span<const IdentityId> identities = {});

struct IdentifyConfig {
    double min_confidence = kDefaultMinConfidence;
    int input_side = kDefaultInputSide;
    std::string dog_label{kDogLabel};
    VotingVariant voting = VotingVariant::max_single;
};

inline constexpr std::string_view kNoDogDetected = "no_dog_detected";

struct IdentifyOutcome {
    std::optional<IdentityPrediction> prediction;
    std::string reason;                // set when prediction is empty
    std::vector<Detection> detections;  // every detection after clamping, before filtering
};

/// detect -> filter_dogs -> select_primary -> extract_windows -> classify_batch -> vote.
/// Failures are rethrown as PipelineError naming the stage.
IdentifyOutcome identify(const Image& image, DetectorBackend& detector, ClassifierBackend& classifier,
                         const IdentifyConfig& config = {});

/// Runs windows, classification and voting for one given detection.
IdentityPrediction identify_detection(const Image& image, const Detection& detection,
                                      ClassifierBackend& classifier, const IdentifyConfig& config = {});

/// Multi-dog mode: one prediction per dog passing the filter, in confidence order.
std::vector<IdentityPrediction> identify_all(const Image& image, DetectorBackend& detector,
                                             ClassifierBackend& classifier,
                                             const IdentifyConfig& config = {});

/// Prediction document: identity, confidence, rule, per-window labels and top-k scores, box.
nlohmann::json to_json(const IdentityPrediction& prediction, std::size_t top_k = 5);
nlohmann::json to_json(const Detection& detection);

}  // namespace petident
