#include "pipeline_config.hpp"

#include <fstream>
#include <set>

#include "petident/errors.hpp"
#include "petident/onnx_backends.hpp"

namespace petident::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kTopLevelKeys{
    "detector_model_path", "detector_metadata_path", "label_map_path", "classifier_model_path",
    "classifier_metadata_path", "detector_table", "classifier_table", "identities_path",
    "dog_class", "min_confidence", "input_side", "voting_variant", "all_dogs", "augmentation",
    "cv_k", "protocol", "holdout_fold", "seed", "jobs"};

const std::set<std::string> kAugmentationKeys{"flip_probability", "shift_fraction", "shear_degrees",
                                              "zoom_range", "fill_mode", "factor", "mode"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
    }
}

std::string resolve(const std::string& value, const fs::path& base) {
    if (value.empty() || base.empty()) return value;
    const fs::path p(value);
    return p.is_absolute() ? value : (base / p).string();
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string_view to_string(ExpansionMode mode) { return mode == ExpansionMode::total ? "total" : "additional"; }
std::string_view to_string(EvaluationProtocol p) {
    return p == EvaluationProtocol::cross_validation ? "cross_validation" : "holdout";
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& doc, const fs::path& base_dir) {
    reject_unknown(doc, kTopLevelKeys, "");
    PipelineConfig c;
    try {
        for (auto [key, field] : {std::pair{"detector_model_path", &c.detector_model_path},
                                  std::pair{"detector_metadata_path", &c.detector_metadata_path},
                                  std::pair{"label_map_path", &c.label_map_path},
                                  std::pair{"classifier_model_path", &c.classifier_model_path},
                                  std::pair{"classifier_metadata_path", &c.classifier_metadata_path},
                                  std::pair{"detector_table", &c.detector_table},
                                  std::pair{"classifier_table", &c.classifier_table},
                                  std::pair{"identities_path", &c.identities_path}}) {
            read(doc, key, *field);
            *field = resolve(*field, base_dir);
        }
        read(doc, "dog_class", c.dog_class);
        read(doc, "min_confidence", c.min_confidence);
        read(doc, "input_side", c.input_side);
        if (doc.contains("voting_variant")) {
            c.voting_variant = parse_voting_variant(doc.at("voting_variant").get<std::string>());
        }
        read(doc, "all_dogs", c.all_dogs);
        read(doc, "cv_k", c.cv_k);
        if (doc.contains("protocol")) {
            const auto p = doc.at("protocol").get<std::string>();
            if (p == "cross_validation") c.protocol = EvaluationProtocol::cross_validation;
            else if (p == "holdout") c.protocol = EvaluationProtocol::holdout;
            else throw ConfigError("protocol must be cross_validation or holdout");
        }
        read(doc, "holdout_fold", c.holdout_fold);
        read(doc, "seed", c.seed);
        read(doc, "jobs", c.jobs);

        if (doc.contains("augmentation")) {
            const auto& a = doc.at("augmentation");
            reject_unknown(a, kAugmentationKeys, "augmentation.");
            read(a, "flip_probability", c.augmentation.flip_probability);
            read(a, "shift_fraction", c.augmentation.shift_fraction);
            read(a, "shear_degrees", c.augmentation.shear_degrees);
            if (a.contains("zoom_range")) {
                const auto z = a.at("zoom_range").get<std::vector<double>>();
                if (z.size() != 2) throw ConfigError("augmentation.zoom_range must be [lo, hi]");
                c.augmentation.zoom_range = {z[0], z[1]};
            }
            if (a.contains("fill_mode")) c.augmentation.fill_mode = parse_fill_mode(a.at("fill_mode").get<std::string>());
            read(a, "factor", c.augmentation_factor);
            if (a.contains("mode")) {
                const auto m = a.at("mode").get<std::string>();
                if (m == "total") c.augmentation_mode = ExpansionMode::total;
                else if (m == "additional") c.augmentation_mode = ExpansionMode::additional;
                else throw ConfigError("augmentation.mode must be total or additional");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(doc, path.parent_path());
}

void PipelineConfig::validate() const {
    if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) throw ConfigError("min_confidence must be in [0,1]");
    if (input_side < 1) throw ConfigError("input_side must be positive");
    if (augmentation_factor < 1) throw ConfigError("augmentation.factor must be >= 1");
    if (cv_k < 2) throw ConfigError("cv_k must be >= 2");
    if (holdout_fold >= cv_k) throw ConfigError("holdout_fold must be < cv_k");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (dog_class.empty()) throw ConfigError("dog_class must not be empty");
    try {
        augmentation.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("augmentation: ") + e.what());
    }
}

json PipelineConfig::to_json() const {
    return {{"detector_model_path", detector_model_path},
            {"detector_metadata_path", detector_metadata_path},
            {"label_map_path", label_map_path},
            {"classifier_model_path", classifier_model_path},
            {"classifier_metadata_path", classifier_metadata_path},
            {"detector_table", detector_table},
            {"classifier_table", classifier_table},
            {"identities_path", identities_path},
            {"dog_class", dog_class},
            {"min_confidence", min_confidence},
            {"input_side", input_side},
            {"voting_variant", petident::to_string(voting_variant)},
            {"all_dogs", all_dogs},
            {"augmentation",
             {{"flip_probability", augmentation.flip_probability},
              {"shift_fraction", augmentation.shift_fraction},
              {"shear_degrees", augmentation.shear_degrees},
              {"zoom_range", {augmentation.zoom_range.lo, augmentation.zoom_range.hi}},
              {"fill_mode", petident::to_string(augmentation.fill_mode)},
              {"factor", augmentation_factor},
              {"mode", to_string(augmentation_mode)}}},
            {"cv_k", cv_k},
            {"protocol", to_string(protocol)},
            {"holdout_fold", holdout_fold},
            {"seed", seed},
            {"jobs", jobs}};
}

IdentifyConfig PipelineConfig::identify_config() const {
    return {min_confidence, input_side, dog_class, voting_variant};
}

AugmentationSpec PipelineConfig::augmentation_spec() const {
    auto spec = augmentation;
    spec.seed = seed;
    return spec;
}

std::unique_ptr<DetectorBackend> make_detector(const PipelineConfig& config) {
    if (!config.detector_table.empty()) {
        return std::make_unique<ScriptedDetector>(ScriptedDetector::load(config.detector_table));
    }
    if (config.detector_model_path.empty()) {
        throw ConfigError("no detector configured (set detector_table or detector_model_path)");
    }
    if (config.label_map_path.empty()) throw ConfigError("detector_model_path requires label_map_path");
    return OnnxDetector::load(config.detector_model_path, config.label_map_path, config.detector_metadata_path);
}

std::unique_ptr<ClassifierBackend> make_classifier(const PipelineConfig& config,
                                                   const std::vector<IdentityId>& fallback_ids,
                                                   std::optional<std::size_t> fold) {
    if (!config.classifier_table.empty()) {
        auto ids = config.identities_path.empty() ? fallback_ids : load_identities(config.identities_path);
        if (ids.empty()) throw ConfigError("classifier_table requires identities_path (or a manifest)");
        return std::make_unique<MockClassifier>(
            MockClassifier::load(config.classifier_table, config.input_side, std::move(ids)));
    }
    if (config.classifier_model_path.empty()) {
        throw ConfigError("no classifier configured (set classifier_table or classifier_model_path)");
    }
    std::string path = config.classifier_model_path;
    if (const auto pos = path.find("{fold}"); pos != std::string::npos) {
        if (!fold) throw ConfigError("classifier_model_path contains {fold} but no fold is being evaluated");
        path.replace(pos, 6, std::to_string(*fold));
    }
    auto backend = OnnxClassifier::load(path, config.classifier_metadata_path);
    if (backend->input_side() != config.input_side) {
        throw ConfigError("classifier model expects input side " + std::to_string(backend->input_side()) +
                          " but input_side is " + std::to_string(config.input_side));
    }
    return backend;
}

}  // namespace petident::cli
