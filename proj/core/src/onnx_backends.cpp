#include "petident/onnx_backends.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "petident/errors.hpp"

namespace petident {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

TensorLayout parse_layout(const std::string& s) {
    if (s == "nhwc") return TensorLayout::nhwc;
    if (s == "nchw") return TensorLayout::nchw;
    throw BackendError("unknown input_layout '" + s + "'");
}

InputScaling parse_scaling(const std::string& s) {
    if (s == "inception") return InputScaling::inception;
    if (s == "unit") return InputScaling::unit;
    if (s == "raw") return InputScaling::raw;
    throw BackendError("unknown scaling '" + s + "'");
}

json read_json(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw BackendError(std::string(what) + " not found: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw BackendError(std::string(what) + " " + path.string() + ": " + e.what());
    }
}

fs::path default_sidecar(const fs::path& model) {
    return fs::path(model.string() + ".json");
}

cv::dnn::Net read_net(const fs::path& model_path) {
    if (!fs::exists(model_path)) throw BackendError("model file not found: " + model_path.string());
    try {
        auto net = cv::dnn::readNetFromONNX(model_path.string());
        if (net.empty()) throw BackendError("model file is empty: " + model_path.string());
        return net;
    } catch (const cv::Exception& e) {
        throw BackendError("cannot load model " + model_path.string() + ": " + e.what());
    }
}

cv::Mat make_blob(const Image& image, TensorLayout layout, InputScaling scaling) {
    auto data = to_input_tensor(image, layout, scaling);
    const int s = image.width;
    std::vector<int> shape = layout == TensorLayout::nhwc ? std::vector<int>{1, s, s, 3}
                                                          : std::vector<int>{1, 3, s, s};
    cv::Mat blob(shape, CV_32F);
    std::copy(data.begin(), data.end(), blob.ptr<float>());
    return blob;
}

}  // namespace

ClassifierMetadata ClassifierMetadata::load(const fs::path& path) {
    const auto doc = read_json(path, "classifier metadata");
    try {
        ClassifierMetadata meta;
        meta.layout = parse_layout(doc.value("input_layout", "nhwc"));
        meta.scaling = parse_scaling(doc.value("scaling", "inception"));
        meta.input_side = doc.value("input_side", kDefaultInputSide);
        for (const auto& id : doc.at("identities")) meta.identities.emplace_back(id.get<std::string>());
        if (meta.input_side < 1) throw BackendError("input_side must be positive");
        if (meta.identities.empty()) throw BackendError("identities list is empty");
        return meta;
    } catch (const json::exception& e) {
        throw BackendError("classifier metadata " + path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw BackendError("classifier metadata " + path.string() + ": " + e.what());
    }
}

DetectorMetadata DetectorMetadata::load(const fs::path& path) {
    const auto doc = read_json(path, "detector metadata");
    try {
        DetectorMetadata meta;
        meta.layout = parse_layout(doc.value("input_layout", "nchw"));
        meta.scaling = parse_scaling(doc.value("scaling", "unit"));
        meta.input_side = doc.value("input_side", 300);
        const auto fmt = doc.value("box_format", "yxyx_normalized");
        if (fmt == "yxyx_normalized") meta.box_format = BoxFormat::yxyx_normalized;
        else if (fmt == "xyxy_normalized") meta.box_format = BoxFormat::xyxy_normalized;
        else throw BackendError("unknown box_format '" + fmt + "'");
        if (doc.contains("outputs")) {
            const auto& o = doc["outputs"];
            meta.boxes_output = o.value("boxes", meta.boxes_output);
            meta.classes_output = o.value("classes", meta.classes_output);
            meta.scores_output = o.value("scores", meta.scores_output);
        }
        if (meta.input_side < 1) throw BackendError("input_side must be positive");
        return meta;
    } catch (const json::exception& e) {
        throw BackendError("detector metadata " + path.string() + ": " + e.what());
    }
}

std::vector<float> to_input_tensor(const Image& image, TensorLayout layout, InputScaling scaling) {
    const auto scale = [scaling](std::uint8_t v) -> float {
        switch (scaling) {
        case InputScaling::inception: return static_cast<float>(v / 127.5 - 1.0);
        case InputScaling::unit: return static_cast<float>(v / 255.0);
        case InputScaling::raw: return static_cast<float>(v);
        }
        return 0.0f;
    };
    const std::size_t plane = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
    std::vector<float> out(plane * Image::kChannels);
    for (std::size_t p = 0; p < plane; ++p) {
        for (int c = 0; c < Image::kChannels; ++c) {
            const float v = scale(image.pixels[p * Image::kChannels + static_cast<std::size_t>(c)]);
            if (layout == TensorLayout::nhwc) out[p * Image::kChannels + static_cast<std::size_t>(c)] = v;
            else out[static_cast<std::size_t>(c) * plane + p] = v;
        }
    }
    return out;
}

std::map<int, std::string> load_label_map(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw BackendError("label map not found: " + path.string());
    std::map<int, std::string> labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream is(line);
        int index = 0;
        std::string name;
        if (!(is >> index >> name)) {
            throw BackendError("label map " + path.string() + ":" + std::to_string(line_no) + ": expected '<index> <name>'");
        }
        labels[index] = name;
    }
    if (labels.empty()) throw BackendError("label map " + path.string() + " is empty");
    return labels;
}

struct OnnxClassifier::Impl {
    cv::dnn::Net net;
};

OnnxClassifier::OnnxClassifier(std::unique_ptr<Impl> impl, ClassifierMetadata meta)
    : impl_(std::move(impl)), meta_(std::move(meta)) {}

OnnxClassifier::~OnnxClassifier() = default;

std::unique_ptr<OnnxClassifier> OnnxClassifier::load(const fs::path& model_path, fs::path sidecar_path) {
    if (sidecar_path.empty()) sidecar_path = default_sidecar(model_path);
    auto meta = ClassifierMetadata::load(sidecar_path);
    auto impl = std::make_unique<Impl>();
    impl->net = read_net(model_path);
    return std::unique_ptr<OnnxClassifier>(new OnnxClassifier(std::move(impl), std::move(meta)));
}

std::vector<double> OnnxClassifier::do_run(const Window& window) {
    cv::Mat out;
    try {
        impl_->net.setInput(make_blob(window.pixels, meta_.layout, meta_.scaling));
        out = impl_->net.forward();
    } catch (const cv::Exception& e) {
        throw BackendError(std::string("classifier forward pass failed: ") + e.what());
    }
    cv::Mat flat = out.reshape(1, 1);
    flat.convertTo(flat, CV_64F);
    return std::vector<double>(flat.begin<double>(), flat.end<double>());
}

struct OnnxDetector::Impl {
    cv::dnn::Net net;
};

OnnxDetector::OnnxDetector(std::unique_ptr<Impl> impl, DetectorMetadata meta,
                           std::map<int, std::string> labels)
    : impl_(std::move(impl)), meta_(std::move(meta)), labels_(std::move(labels)) {}

OnnxDetector::~OnnxDetector() = default;

std::unique_ptr<OnnxDetector> OnnxDetector::load(const fs::path& model_path, const fs::path& label_map_path,
                                                 fs::path sidecar_path) {
    DetectorMetadata meta;
    if (sidecar_path.empty()) {
        const auto guess = default_sidecar(model_path);
        if (fs::exists(guess)) meta = DetectorMetadata::load(guess);
    } else {
        meta = DetectorMetadata::load(sidecar_path);
    }
    auto labels = load_label_map(label_map_path);
    auto impl = std::make_unique<Impl>();
    impl->net = read_net(model_path);
    return std::unique_ptr<OnnxDetector>(new OnnxDetector(std::move(impl), std::move(meta), std::move(labels)));
}

std::vector<Detection> OnnxDetector::do_run(const Image& image) {
    const Image input = resize_bilinear(image, meta_.input_side, meta_.input_side);
    std::vector<cv::Mat> outs;
    try {
        impl_->net.setInput(make_blob(input, meta_.layout, meta_.scaling));
        impl_->net.forward(outs, std::vector<cv::String>{meta_.boxes_output, meta_.classes_output,
                                                         meta_.scores_output});
    } catch (const cv::Exception& e) {
        throw BackendError(std::string("detector forward pass failed: ") + e.what());
    }
    if (outs.size() != 3) throw BackendError("detector produced " + std::to_string(outs.size()) + " outputs, expected 3");
    const auto flat = [](const cv::Mat& m) {
        cv::Mat f = m.reshape(1, 1);
        f.convertTo(f, CV_64F);
        return std::vector<double>(f.begin<double>(), f.end<double>());
    };
    const auto boxes = flat(outs[0]);
    const auto classes = flat(outs[1]);
    const auto scores = flat(outs[2]);
    const std::size_t n = scores.size();
    if (classes.size() != n || boxes.size() != 4 * n) {
        throw BackendError("detector output shapes disagree (" + std::to_string(boxes.size()) + " box values, " +
                           std::to_string(classes.size()) + " classes, " + std::to_string(n) + " scores)");
    }

    std::vector<Detection> dets;
    dets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x0, y0, x1, y1;
        if (meta_.box_format == BoxFormat::yxyx_normalized) {
            y0 = boxes[4 * i]; x0 = boxes[4 * i + 1]; y1 = boxes[4 * i + 2]; x1 = boxes[4 * i + 3];
        } else {
            x0 = boxes[4 * i]; y0 = boxes[4 * i + 1]; x1 = boxes[4 * i + 2]; y1 = boxes[4 * i + 3];
        }
        const int px0 = static_cast<int>(std::lround(x0 * image.width));
        const int py0 = static_cast<int>(std::lround(y0 * image.height));
        const int px1 = static_cast<int>(std::lround(x1 * image.width));
        const int py1 = static_cast<int>(std::lround(y1 * image.height));
        const int cls = static_cast<int>(std::lround(classes[i]));
        auto it = labels_.find(cls);
        Detection d;
        d.box = {px0, py0, px1 - px0, py1 - py0};
        d.class_label = it == labels_.end() ? "class_" + std::to_string(cls) : it->second;
        d.confidence = std::clamp(scores[i], 0.0, 1.0);
        dets.push_back(std::move(d));
    }
    return dets;
}

}  // namespace petident
