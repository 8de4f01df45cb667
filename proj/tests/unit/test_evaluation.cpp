#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "petident/errors.hpp"
#include "petident/evaluation.hpp"
#include "petident/fixtures.hpp"
#include "temp_dir.hpp"

namespace petident {
namespace {

constexpr int kSide = 32;

struct Harness {
    explicit Harness(FixtureOptions opt) : set(generate_fixture_set(opt)), detector(set.detector()) {
        for (const auto& f : set.images) images.emplace(f.path, f.image);
        options.identify.input_side = kSide;
        options.loader = [this](const std::filesystem::path& p) { return images.at(p.generic_string()); };
    }

    EvaluationReport run(const FoldAssignment& folds) {
        auto classifier = std::make_shared<MockClassifier>(set.classifier(kSide));
        return evaluate(set.manifest, folds, detector, [&](std::size_t, auto) { return classifier; }, options);
    }

    FixtureSet set;
    ScriptedDetector detector;
    std::map<std::string, Image> images;
    EvaluationOptions options;
};

FixtureOptions small(std::size_t ids, std::size_t per) {
    FixtureOptions o;
    o.num_identities = ids;
    o.images_per_identity = per;
    o.min_side = 48;
    o.max_side = 64;
    o.seed = 3;
    return o;
}

void expect_consistent(const EvaluationReport& r, std::size_t entries) {
    EXPECT_EQ(r.total(), entries);
    EXPECT_EQ(r.records.size(), entries);
    std::size_t trace = 0;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < r.confusion.size(); ++c) trace += r.confusion[c][c];
    for (const auto& rec : r.records) correct += rec.correct();
    EXPECT_EQ(trace, correct);
    EXPECT_NEAR(static_cast<double>(trace) / static_cast<double>(r.total()), r.overall_accuracy, 1e-12);
    const double mean = std::accumulate(r.per_fold_accuracy.begin(), r.per_fold_accuracy.end(), 0.0) /
                        static_cast<double>(r.per_fold_accuracy.size());
    EXPECT_NEAR(mean, r.mean_accuracy, 1e-12);
    EXPECT_EQ(r.per_fold_accuracy.size(), r.evaluated_folds.size());
}

TEST(Accuracy, Definition) {
    const std::vector<std::size_t> truth{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto pred = truth;
    EXPECT_DOUBLE_EQ(accuracy(pred, truth), 1.0);
    pred[0] = 5;
    pred[1] = 5;
    EXPECT_DOUBLE_EQ(accuracy(pred, truth), 0.8);
    std::vector<std::size_t> wrong(10, 11);
    EXPECT_DOUBLE_EQ(accuracy(wrong, truth), 0.0);
    EXPECT_THROW(accuracy({}, {}), std::invalid_argument);
    EXPECT_THROW(accuracy(std::vector<std::size_t>{1}, truth), std::invalid_argument);
}

TEST(Evaluate, PerfectMockFiveFolds) {
    Harness h(small(4, 5));
    const auto report = h.run(make_folds(h.set.manifest, 5, 0));
    ASSERT_EQ(report.per_fold_accuracy.size(), 5u);
    for (double a : report.per_fold_accuracy) EXPECT_DOUBLE_EQ(a, 1.0);
    EXPECT_DOUBLE_EQ(report.mean_accuracy, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(report.confusion[i][j], i == j ? 5u : 0u);
    }
    expect_consistent(report, 20);
}

TEST(Evaluate, ConstantPredictor) {
    auto opt = small(4, 4);
    opt.constant_class = 0;
    Harness h(opt);
    const auto report = h.run(make_folds(h.set.manifest, 4, 1));
    EXPECT_DOUBLE_EQ(report.mean_accuracy, 0.25);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(report.confusion[i][0], 4u);
        for (std::size_t j = 1; j < 4; ++j) EXPECT_EQ(report.confusion[i][j], 0u);
    }
    expect_consistent(report, 16);
}

TEST(Evaluate, NoDetectionCountsAsIncorrect) {
    auto opt = small(3, 4);
    opt.no_detection_images = 1;
    opt.correct_fraction = 11.0 / 12.0;
    Harness h(opt);
    const auto report = h.run(make_folds(h.set.manifest, 3, 2));
    EXPECT_EQ(std::accumulate(report.no_detection.begin(), report.no_detection.end(), std::size_t{0}), 1u);
    std::size_t missing = 0;
    for (const auto& r : report.records) {
        if (!r.prediction) {
            ++missing;
            EXPECT_EQ(r.reason, "no_dog_detected");
            EXPECT_FALSE(r.correct());
        }
    }
    EXPECT_EQ(missing, 1u);
    EXPECT_NEAR(report.overall_accuracy, 11.0 / 12.0, 1e-12);
    expect_consistent(report, 12);
}

TEST(Evaluate, ParallelMatchesSerial) {
    auto opt = small(5, 4);
    opt.correct_fraction = 0.6;
    Harness h(opt);
    const auto folds = make_folds(h.set.manifest, 4, 8);
    const auto serial = h.run(folds);
    h.options.jobs = 4;
    EXPECT_EQ(h.run(folds), serial);
}

TEST(Evaluate, SingleFoldHoldout) {
    Harness h(small(4, 5));
    h.options.single_fold = 2;
    const auto folds = make_folds(h.set.manifest, 5, 0);
    const auto report = h.run(folds);
    EXPECT_EQ(report.evaluated_folds, (std::vector<std::size_t>{2}));
    EXPECT_EQ(report.records.size(), folds.members(2).size());
    h.options.single_fold = 9;
    EXPECT_THROW(h.run(folds), std::invalid_argument);
}

TEST(Evaluate, FactoryReceivesComplement) {
    Harness h(small(3, 3));
    const auto folds = make_folds(h.set.manifest, 3, 4);
    auto classifier = std::make_shared<MockClassifier>(h.set.classifier(kSide));
    std::size_t calls = 0;
    evaluate(h.set.manifest, folds, h.detector,
             [&](std::size_t fold, std::span<const std::size_t> training) {
                 ++calls;
                 const auto expected = folds.complement(fold);
                 EXPECT_TRUE(std::equal(training.begin(), training.end(), expected.begin(), expected.end()));
                 return classifier;
             },
             h.options);
    EXPECT_EQ(calls, 3u);
}

TEST(Evaluate, Errors) {
    Harness h(small(3, 3));
    const auto folds = make_folds(h.set.manifest, 3, 4);

    auto wrong_k = std::make_shared<MockClassifier>(kSide, std::vector<IdentityId>{IdentityId("x"), IdentityId("y")});
    EXPECT_THROW(evaluate(h.set.manifest, folds, h.detector, [&](std::size_t, auto) { return wrong_k; }, h.options),
                 Error);

    auto ids = h.set.identities;
    std::swap(ids[0], ids[1]);
    auto reordered = std::make_shared<MockClassifier>(kSide, ids);
    EXPECT_THROW(evaluate(h.set.manifest, folds, h.detector, [&](std::size_t, auto) { return reordered; }, h.options),
                 Error);

    auto bad = folds;
    bad.fold_of.pop_back();
    EXPECT_THROW(h.run(bad), ManifestError);
}

TEST(Report, RoundTrip) {
    testing::TempDir dir;
    auto opt = small(3, 4);
    opt.correct_fraction = 0.5;
    opt.no_detection_images = 1;
    Harness h(opt);
    h.options.config_echo = {{"seed", 3}, {"voting_variant", "max_single"}};
    const auto report = h.run(make_folds(h.set.manifest, 4, 2));
    write_report(report, dir / "r.json");
    EXPECT_EQ(read_report(dir / "r.json"), report);
}

TEST(Report, MissingDirectoryIsError) {
    testing::TempDir dir;
    Harness h(small(2, 2));
    const auto report = h.run(make_folds(h.set.manifest, 2, 0));
    EXPECT_THROW(write_report(report, dir / "no" / "such" / "dir" / "r.json"), Error);
    EXPECT_THROW(read_report(dir / "absent.json"), Error);
}

TEST(Report, SixteenClassShape) {
    Harness h(small(16, 2));
    const auto doc = to_json(h.run(make_folds(h.set.manifest, 2, 0)));
    EXPECT_EQ(doc["schema"], std::string(kReportSchema));
    ASSERT_EQ(doc["confusion"].size(), 16u);
    for (const auto& row : doc["confusion"]) {
        ASSERT_EQ(row.size(), 16u);
        for (const auto& v : row) EXPECT_TRUE(v.is_number_unsigned());
    }
}

TEST(Report, RejectsWrongSchema) {
    nlohmann::json doc{{"schema", "something-else/1"}};
    EXPECT_THROW(report_from_json(doc), Error);
}

}  // namespace
}  // namespace petident
