#include "petident/evaluation.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include "petident/errors.hpp"
#include "petident/parallel.hpp"

namespace petident {

namespace fs = std::filesystem;
using nlohmann::json;

double accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == truths[i];
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::size_t EvaluationReport::total() const {
    std::size_t n = std::accumulate(no_detection.begin(), no_detection.end(), std::size_t{0});
    for (const auto& row : confusion) n = std::accumulate(row.begin(), row.end(), n);
    return n;
}

EvaluationReport evaluate(const DatasetManifest& manifest, const FoldAssignment& folds,
                          DetectorBackend& detector, const ClassifierFactory& factory,
                          const EvaluationOptions& options) {
    check_folds(folds, manifest);
    if (options.single_fold && *options.single_fold >= folds.k) {
        throw std::invalid_argument("single_fold out of range");
    }
    const std::size_t k_classes = manifest.registry().size();
    const ImageLoader loader = options.loader ? options.loader : ImageLoader(load_image);

    EvaluationReport report;
    report.identities = manifest.registry().ids();
    report.k = folds.k;
    report.fold_counts = folds.fold_sizes();
    report.confusion.assign(k_classes, std::vector<std::size_t>(k_classes, 0));
    report.no_detection.assign(k_classes, 0);
    report.config_echo = options.config_echo;

    std::vector<std::optional<ImageRecord>> records(manifest.size());
    for (std::size_t fold = 0; fold < folds.k; ++fold) {
        if (options.single_fold && fold != *options.single_fold) continue;
        const auto held_out = folds.members(fold);
        if (held_out.empty()) continue;
        const auto training = folds.complement(fold);
        auto classifier = factory(fold, training);
        if (!classifier) throw Error("no classifier for fold " + std::to_string(fold));
        if (classifier->num_classes() != k_classes) {
            throw Error("fold " + std::to_string(fold) + ": classifier has " +
                        std::to_string(classifier->num_classes()) + " classes, manifest has " +
                        std::to_string(k_classes));
        }
        if (const auto ids = classifier->identities(); !ids.empty() && ids != manifest.registry().ids()) {
            throw Error("fold " + std::to_string(fold) + ": classifier identity order differs from the manifest registry");
        }

        parallel_for(held_out.size(), options.jobs, [&](std::size_t j) {
            const std::size_t entry = held_out[j];
            const auto image = loader(manifest.resolve(entry));
            const auto outcome = identify(image, detector, *classifier, options.identify);
            ImageRecord rec(manifest.entries()[entry].image_path.generic_string(),
                            manifest.entries()[entry].identity, manifest.class_of(entry), fold);
            if (outcome.prediction) {
                const auto& p = *outcome.prediction;
                rec.prediction = p.class_index;
                rec.decision_rule = p.decision_rule;
                rec.confidence = p.confidence;
                for (auto label : p.window_labels) rec.correct_windows += label == rec.truth_index;
            } else {
                rec.reason = outcome.reason;
            }
            records[entry] = std::move(rec);
        });

        std::size_t hits = 0;
        for (auto entry : held_out) hits += records[entry]->correct();
        report.evaluated_folds.push_back(fold);
        report.per_fold_accuracy.push_back(static_cast<double>(hits) / static_cast<double>(held_out.size()));
    }

    std::size_t correct = 0;
    std::size_t window_hits = 0;
    std::size_t windows = 0;
    for (auto& rec : records) {
        if (!rec) continue;
        if (rec->prediction) {
            ++report.confusion[rec->truth_index][*rec->prediction];
            window_hits += rec->correct_windows;
            windows += kWindowCount;
        } else {
            ++report.no_detection[rec->truth_index];
        }
        correct += rec->correct();
        report.records.push_back(std::move(*rec));
    }
    if (report.records.empty()) throw Error("no entries evaluated");
    report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(report.records.size());
    report.window_accuracy = windows ? static_cast<double>(window_hits) / static_cast<double>(windows) : 0.0;
    report.mean_accuracy = std::accumulate(report.per_fold_accuracy.begin(), report.per_fold_accuracy.end(), 0.0) /
                           static_cast<double>(report.per_fold_accuracy.size());
    return report;
}

json to_json(const EvaluationReport& r) {
    json ids = json::array();
    for (const auto& id : r.identities) ids.push_back(id.str());
    json records = json::array();
    for (const auto& rec : r.records) {
        json j{{"image_path", rec.image_path},
               {"truth", rec.truth.str()},
               {"truth_index", rec.truth_index},
               {"fold", rec.fold},
               {"prediction", rec.prediction ? json(*rec.prediction) : json(nullptr)},
               {"predicted_identity", rec.prediction ? json(r.identities.at(*rec.prediction).str()) : json(nullptr)},
               {"decision_rule", rec.decision_rule ? json(to_string(*rec.decision_rule)) : json(nullptr)},
               {"confidence", rec.confidence},
               {"correct_windows", rec.correct_windows},
               {"reason", rec.reason}};
        records.push_back(std::move(j));
    }
    return {{"schema", kReportSchema},
            {"identities", std::move(ids)},
            {"k", r.k},
            {"fold_counts", r.fold_counts},
            {"evaluated_folds", r.evaluated_folds},
            {"per_fold_accuracy", r.per_fold_accuracy},
            {"mean_accuracy", r.mean_accuracy},
            {"overall_accuracy", r.overall_accuracy},
            {"window_accuracy", r.window_accuracy},
            {"confusion", r.confusion},
            {"no_detection", r.no_detection},
            {"records", std::move(records)},
            {"config", r.config_echo}};
}

EvaluationReport report_from_json(const json& doc) {
    try {
        if (doc.at("schema").get<std::string>() != kReportSchema) {
            throw Error("unsupported report schema '" + doc.at("schema").get<std::string>() + "'");
        }
        EvaluationReport r;
        for (const auto& id : doc.at("identities")) r.identities.emplace_back(id.get<std::string>());
        r.k = doc.at("k").get<std::size_t>();
        r.fold_counts = doc.at("fold_counts").get<std::vector<std::size_t>>();
        r.evaluated_folds = doc.at("evaluated_folds").get<std::vector<std::size_t>>();
        r.per_fold_accuracy = doc.at("per_fold_accuracy").get<std::vector<double>>();
        r.mean_accuracy = doc.at("mean_accuracy").get<double>();
        r.overall_accuracy = doc.at("overall_accuracy").get<double>();
        r.window_accuracy = doc.at("window_accuracy").get<double>();
        r.confusion = doc.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        r.no_detection = doc.at("no_detection").get<std::vector<std::size_t>>();
        for (const auto& j : doc.at("records")) {
            ImageRecord rec(j.at("image_path").get<std::string>(), IdentityId(j.at("truth").get<std::string>()),
                            j.at("truth_index").get<std::size_t>(), j.at("fold").get<std::size_t>());
            if (!j.at("prediction").is_null()) rec.prediction = j.at("prediction").get<std::size_t>();
            if (!j.at("decision_rule").is_null()) {
                rec.decision_rule = parse_decision_rule(j.at("decision_rule").get<std::string>());
            }
            rec.confidence = j.at("confidence").get<double>();
            rec.correct_windows = j.at("correct_windows").get<std::size_t>();
            rec.reason = j.at("reason").get<std::string>();
            r.records.push_back(std::move(rec));
        }
        r.config_echo = doc.at("config");
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
}

void write_report(const EvaluationReport& report, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write report " + path.string());
    out << to_json(report).dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

EvaluationReport read_report(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("report " + path.string() + ": " + e.what());
    }
    return report_from_json(doc);
}

}  // namespace petident
