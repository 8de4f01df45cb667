#include "petident/identification.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "petident/errors.hpp"

namespace petident {

using nlohmann::json;

std::string_view to_string(DecisionRule rule) {
    return rule == DecisionRule::majority ? "majority" : "strongest_activation";
}

std::string_view to_string(VotingVariant variant) {
    return variant == VotingVariant::max_single ? "max_single" : "sum_scores";
}

DecisionRule parse_decision_rule(std::string_view text) {
    if (text == "majority") return DecisionRule::majority;
    if (text == "strongest_activation") return DecisionRule::strongest_activation;
    throw std::invalid_argument("unknown decision rule '" + std::string(text) + "'");
}

VotingVariant parse_voting_variant(std::string_view text) {
    if (text == "max_single") return VotingVariant::max_single;
    if (text == "sum_scores") return VotingVariant::sum_scores;
    throw std::invalid_argument("unknown voting variant '" + std::string(text) + "'");
}

IdentityPrediction vote(std::span<const ScoreVector> scores, VotingVariant variant,
                        std::span<const IdentityId> identities) {
    if (scores.size() != kWindowCount) {
        throw InferenceError("vote needs exactly 3 score vectors, got " + std::to_string(scores.size()));
    }
    const std::size_t k = scores[0].size();
    if (k == 0) throw InferenceError("vote: score vectors are empty");
    for (const auto& s : scores) {
        if (s.size() != k) throw InferenceError("vote: score vectors differ in length");
    }

    IdentityPrediction p;
    for (std::size_t w = 0; w < kWindowCount; ++w) {
        p.window_scores[w] = scores[w];
        p.window_labels[w] = scores[w].argmax();
    }
    const auto& labels = p.window_labels;

    std::optional<std::size_t> majority;
    if (labels[0] == labels[1] || labels[0] == labels[2]) majority = labels[0];
    else if (labels[1] == labels[2]) majority = labels[1];

    if (majority) {
        p.class_index = *majority;
        p.decision_rule = DecisionRule::majority;
    } else {
        p.decision_rule = DecisionRule::strongest_activation;
        std::size_t best_window = 0;
        if (variant == VotingVariant::max_single) {
            for (std::size_t w = 1; w < kWindowCount; ++w) {
                if (scores[w][labels[w]] > scores[best_window][labels[best_window]]) best_window = w;
            }
        } else {
            const auto summed = [&](std::size_t cls) {
                return scores[0][cls] + scores[1][cls] + scores[2][cls];
            };
            for (std::size_t w = 1; w < kWindowCount; ++w) {
                if (summed(labels[w]) > summed(labels[best_window])) best_window = w;
            }
        }
        p.class_index = labels[best_window];
    }

    const std::size_t c = p.class_index;
    p.confidence = std::clamp((scores[0][c] + scores[1][c] + scores[2][c]) / 3.0, 0.0, 1.0);
    p.identity = identities.size() == k ? identities[c] : IdentityId("class_" + std::to_string(c));
    return p;
}

namespace {

template <typename F>
auto run_stage(Stage stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

}  // namespace

IdentityPrediction identify_detection(const Image& image, const Detection& detection,
                                      ClassifierBackend& classifier, const IdentifyConfig& config) {
    auto windows = run_stage(Stage::windows,
                             [&] { return extract_windows(image, detection.box, config.input_side); });
    auto scores = run_stage(Stage::classify, [&] { return classify_batch(windows, classifier); });
    auto prediction = run_stage(Stage::vote, [&] {
        const auto ids = classifier.identities();
        return vote(scores, config.voting, ids);
    });
    prediction.detection = detection;
    return prediction;
}

IdentifyOutcome identify(const Image& image, DetectorBackend& detector, ClassifierBackend& classifier,
                         const IdentifyConfig& config) {
    IdentifyOutcome outcome;
    outcome.detections = run_stage(Stage::detect, [&] { return detect(image, detector); });
    const auto dogs = filter_dogs(outcome.detections, config.min_confidence, config.dog_label);
    const auto primary = select_primary(dogs);
    if (!primary) {
        outcome.reason = kNoDogDetected;
        return outcome;
    }
    outcome.prediction = identify_detection(image, *primary, classifier, config);
    return outcome;
}

std::vector<IdentityPrediction> identify_all(const Image& image, DetectorBackend& detector,
                                             ClassifierBackend& classifier, const IdentifyConfig& config) {
    const auto detections = run_stage(Stage::detect, [&] { return detect(image, detector); });
    std::vector<IdentityPrediction> out;
    for (const auto& d : filter_dogs(detections, config.min_confidence, config.dog_label)) {
        out.push_back(identify_detection(image, d, classifier, config));
    }
    return out;
}

json to_json(const Detection& d) {
    return {{"class_label", d.class_label},
            {"confidence", d.confidence},
            {"box", {{"x", d.box.x}, {"y", d.box.y}, {"w", d.box.w}, {"h", d.box.h}}}};
}

json to_json(const IdentityPrediction& p, std::size_t top_k) {
    json windows = json::array();
    for (std::size_t w = 0; w < kWindowCount; ++w) {
        const auto& s = p.window_scores[w];
        std::vector<std::size_t> order(s.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
        json top = json::array();
        for (std::size_t i = 0; i < std::min(top_k, order.size()); ++i) {
            top.push_back({{"class_index", order[i]}, {"score", s[order[i]]}});
        }
        windows.push_back({{"ordinal", w}, {"label", p.window_labels[w]}, {"top_scores", std::move(top)}});
    }
    json doc{{"identity", p.identity.str()},
             {"class_index", p.class_index},
             {"confidence", p.confidence},
             {"decision_rule", to_string(p.decision_rule)},
             {"windows", std::move(windows)}};
    doc["detection"] = p.detection ? to_json(*p.detection) : json(nullptr);
    return doc;
}

}  // namespace petident
