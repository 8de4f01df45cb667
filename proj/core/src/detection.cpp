#include "petident/detection.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "csv.hpp"
#include "petident/errors.hpp"

namespace petident {

namespace fs = std::filesystem;

std::vector<Detection> DetectorBackend::run(const Image& image) {
    if (concurrent()) return do_run(image);
    std::lock_guard lock(mutex_);
    return do_run(image);
}

std::vector<Detection> detect(const Image& image, DetectorBackend& backend) {
    if (image.empty()) throw Error("detect: empty image");
    auto raw = backend.run(image);
    std::vector<Detection> out;
    out.reserve(raw.size());
    for (auto& d : raw) {
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
            throw BackendError(backend.name() + ": detection confidence outside [0,1]");
        }
        auto clamped = clamp_box(d.box, image.width, image.height);
        if (!clamped) continue;
        d.box = *clamped;
        out.push_back(std::move(d));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    return out;
}

std::vector<Detection> filter_dogs(std::span<const Detection> detections, double min_confidence,
                                   std::string_view dog_label) {
    std::vector<Detection> out;
    for (const auto& d : detections) {
        if (d.class_label == dog_label && d.confidence >= min_confidence) out.push_back(d);
    }
    return out;
}

std::optional<Detection> select_primary(std::span<const Detection> detections) {
    if (detections.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < detections.size(); ++i) {
        const auto& a = detections[i];
        const auto& b = detections[best];
        if (a.confidence > b.confidence ||
            (a.confidence == b.confidence && a.box.area() > b.box.area())) {
            best = i;
        }
    }
    return detections[best];
}

namespace {

template <typename T>
T parse_number(const std::string& field, const std::string& where) {
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        std::istringstream is(field);
        is.imbue(std::locale::classic());
        if (!(is >> value) || !is.eof()) throw Error(where + ": bad number '" + field + "'");
    } else {
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw Error(where + ": bad integer '" + field + "'");
        }
    }
    return value;
}

}  // namespace

ScriptedDetector ScriptedDetector::load(const fs::path& table_path) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::read_file(table_path);
    } catch (const std::exception& e) {
        throw BackendError(std::string("scripted detector: ") + e.what());
    }
    const std::vector<std::string> expected{"image_path", "class_label", "confidence", "x", "y", "w", "h"};
    if (rows.empty() || rows.front().fields != expected) {
        throw BackendError("scripted detector: " + table_path.string() +
                           ": expected header image_path,class_label,confidence,x,y,w,h");
    }
    ScriptedDetector det;
    const auto base = table_path.parent_path();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        const std::string where = table_path.string() + ":" + std::to_string(rows[r].line);
        if (f.size() != expected.size()) throw BackendError(where + ": wrong field count");
        try {
            Detection d;
            d.class_label = f[1];
            d.confidence = parse_number<double>(f[2], where);
            d.box = {parse_number<int>(f[3], where), parse_number<int>(f[4], where),
                     parse_number<int>(f[5], where), parse_number<int>(f[6], where)};
            const fs::path p(f[0]);
            det.add(source_key(p.is_absolute() ? p : base / p), std::move(d));
        } catch (const Error& e) {
            throw BackendError(std::string("scripted detector: ") + e.what());
        }
    }
    return det;
}

void ScriptedDetector::add(const std::string& key, Detection detection) {
    table_[key].push_back(std::move(detection));
}

std::vector<Detection> ScriptedDetector::do_run(const Image& image) {
    auto it = table_.find(image.source);
    if (it == table_.end()) return {};
    return it->second;
}

void write_detection_table(const std::map<std::string, std::vector<Detection>>& table,
                           const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "image_path,class_label,confidence,x,y,w,h\n";
    out << std::setprecision(17);
    out.imbue(std::locale::classic());
    for (const auto& [key, dets] : table) {
        for (const auto& d : dets) {
            out << csv::escape(key) << ',' << csv::escape(d.class_label) << ',' << d.confidence << ','
                << d.box.x << ',' << d.box.y << ',' << d.box.w << ',' << d.box.h << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace petident
