#pragma once

// Model-file backends running ONNX graphs through OpenCV's dnn module.
//
// Classifier: single input tensor (1xSxSx3 or 1x3xSxS), single length-K
// probability output. A JSON sidecar (default: "<model>.json") is required:
//
//   { "input_layout": "nhwc" | "nchw",
//     "scaling": "inception" | "unit" | "raw",   // v/127.5-1, v/255, v
//     "input_side": 299,
//     "identities": ["rex", "mia", ...] }        // class-index order, length K
//
// Detector: SSD-style graph with outputs boxes [N,4], classes [N], scores [N]
// plus a text label map ("<index> <name>" per line). Its sidecar is optional:
//
//   { "input_layout": "nchw", "scaling": "unit", "input_side": 300,
//     "box_format": "yxyx_normalized" | "xyxy_normalized",
//     "outputs": { "boxes": "boxes", "classes": "classes", "scores": "scores" } }

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "petident/detection.hpp"
#include "petident/inference.hpp"

namespace petident {

enum class TensorLayout { nhwc, nchw };
enum class InputScaling { inception, unit, raw };

struct ClassifierMetadata {
    TensorLayout layout = TensorLayout::nhwc;
    InputScaling scaling = InputScaling::inception;
    int input_side = kDefaultInputSide;
    std::vector<IdentityId> identities;

    static ClassifierMetadata load(const std::filesystem::path& path);
};

enum class BoxFormat { yxyx_normalized, xyxy_normalized };

struct DetectorMetadata {
    TensorLayout layout = TensorLayout::nchw;
    InputScaling scaling = InputScaling::unit;
    int input_side = 300;
    BoxFormat box_format = BoxFormat::yxyx_normalized;
    std::string boxes_output = "boxes";
    std::string classes_output = "classes";
    std::string scores_output = "scores";

    static DetectorMetadata load(const std::filesystem::path& path);
};

/// RGB image of side x side flattened into the requested layout and scaling.
std::vector<float> to_input_tensor(const Image& image, TensorLayout layout, InputScaling scaling);

/// "<index> <name>" per line; blank lines and '#' comments skipped.
std::map<int, std::string> load_label_map(const std::filesystem::path& path);

class OnnxClassifier final : public ClassifierBackend {
public:
    /// Throws BackendError when the model or sidecar is missing or unreadable.
    static std::unique_ptr<OnnxClassifier> load(const std::filesystem::path& model_path,
                                                std::filesystem::path sidecar_path = {});
    ~OnnxClassifier() override;

    int input_side() const override { return meta_.input_side; }
    std::size_t num_classes() const override { return meta_.identities.size(); }
    std::vector<IdentityId> identities() const override { return meta_.identities; }
    bool concurrent() const override { return false; }
    std::string name() const override { return "onnx-classifier"; }

protected:
    std::vector<double> do_run(const Window& window) override;

private:
    struct Impl;
    OnnxClassifier(std::unique_ptr<Impl> impl, ClassifierMetadata meta);
    std::unique_ptr<Impl> impl_;
    ClassifierMetadata meta_;
};

class OnnxDetector final : public DetectorBackend {
public:
    static std::unique_ptr<OnnxDetector> load(const std::filesystem::path& model_path,
                                              const std::filesystem::path& label_map_path,
                                              std::filesystem::path sidecar_path = {});
    ~OnnxDetector() override;

    bool concurrent() const override { return false; }
    std::string name() const override { return "onnx-detector"; }

protected:
    std::vector<Detection> do_run(const Image& image) override;

private:
    struct Impl;
    OnnxDetector(std::unique_ptr<Impl> impl, DetectorMetadata meta, std::map<int, std::string> labels);
    std::unique_ptr<Impl> impl_;
    DetectorMetadata meta_;
    std::map<int, std::string> labels_;
};

}  // namespace petident
