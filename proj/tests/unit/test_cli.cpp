#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "petident/dataset.hpp"
#include "petident/errors.hpp"
#include "petident/image.hpp"
#include "pipeline_config.hpp"
#include "temp_dir.hpp"

namespace petident::cli {
namespace {

using nlohmann::json;
using petident::testing::TempDir;
namespace fs = std::filesystem;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<json> json_lines(const std::string& text) {
    std::vector<json> docs;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) docs.push_back(json::parse(line));
    }
    return docs;
}

class CliTest : public ::testing::Test {
protected:
    fs::path make_fixtures(const std::string& name, std::vector<std::string> extra = {}) {
        std::vector<std::string> args{"fixtures", "--out", (dir / name).string(), "--num-identities", "4",
                                      "--per-identity", "5"};
        args.insert(args.end(), extra.begin(), extra.end());
        const auto r = cli(args);
        EXPECT_EQ(r.code, 0) << r.err;
        return dir / name;
    }
    TempDir dir;
};

TEST_F(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(cli({"--help"}).code, 0);
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"frobnicate"}).code, 1);
    EXPECT_EQ(cli({"detect", "--jobs", "0"}).code, 1);
}

TEST_F(CliTest, DetectOneImage) {
    const auto fx = make_fixtures("fx");
    const auto r = cli({"detect", (fx / "images/dog_01_2.png").string(), "--config", (fx / "config.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto docs = json_lines(r.out);
    ASSERT_EQ(docs.size(), 1u);
    EXPECT_EQ(docs[0]["schema"], "petident-detections/1");
    ASSERT_FALSE(docs[0]["detections"].empty());
    EXPECT_TRUE(docs[0]["detections"][0].contains("box"));
    EXPECT_TRUE(docs[0]["config"].contains("seed"));

    const auto out_dir = dir / "dets";
    const auto r2 = cli({"detect", (fx / "images/dog_01_2.png").string(), "--config", (fx / "config.json").string(),
                         "--out", out_dir.string()});
    ASSERT_EQ(r2.code, 0);
    EXPECT_TRUE(r2.out.empty());
    EXPECT_EQ(read_json(out_dir / "dog_01_2.detections.json")["detections"], docs[0]["detections"]);
}

TEST_F(CliTest, DetectUnreadableImageNamesPath) {
    const auto fx = make_fixtures("fx");
    const auto bad = (dir / "missing.png").string();
    const auto r = cli({"detect", bad, "--config", (fx / "config.json").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find(bad), std::string::npos);
}

TEST_F(CliTest, DetectEmptyInput) {
    const auto r = cli({"detect"});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, WindowsFromBox) {
    Image img(320, 120);
    for (int y = 0; y < 120; ++y) {
        for (int x = 0; x < 320; ++x) img.at(x, y, 0) = static_cast<std::uint8_t>(x % 256);
    }
    save_png(img, dir / "wide.png");
    const auto out = dir / "win";
    const auto r = cli({"windows", (dir / "wide.png").string(), "--box", "0,0,300,100", "--input-side", "50",
                        "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(out / ("wide_w" + std::to_string(k) + ".png")));
    const auto doc = read_json(out / "wide_windows.json");
    ASSERT_EQ(doc["windows"].size(), 3u);
    EXPECT_EQ(doc["windows"][0]["offset"], 0);
    EXPECT_EQ(doc["windows"][1]["offset"], 100);
    EXPECT_EQ(doc["windows"][2]["offset"], 200);
    EXPECT_EQ(load_image(out / "wide_w0.png").width, 50);
}

TEST_F(CliTest, WindowsSquareBoxGivesIdenticalFiles) {
    Image img(64, 64, 90);
    img.at(3, 4, 1) = 7;
    save_png(img, dir / "sq.png");
    const auto out = dir / "win";
    ASSERT_EQ(cli({"windows", (dir / "sq.png").string(), "--box", "2,2,40,40", "--out", out.string()}).code, 0);
    const auto w0 = load_image(out / "sq_w0.png");
    EXPECT_TRUE(w0.same_pixels(load_image(out / "sq_w1.png")));
    EXPECT_TRUE(w0.same_pixels(load_image(out / "sq_w2.png")));
}

TEST_F(CliTest, WindowsZeroAreaBox) {
    save_png(Image(20, 20), dir / "z.png");
    EXPECT_EQ(cli({"windows", (dir / "z.png").string(), "--box", "1,1,0,5", "--out", dir.path().string()}).code, 1);
    EXPECT_EQ(cli({"windows", (dir / "z.png").string(), "--box", "1,1,x", "--out", dir.path().string()}).code, 1);
}

TEST_F(CliTest, WindowsFromDetector) {
    const auto fx = make_fixtures("fx");
    const auto out = dir / "win";
    const auto r = cli({"windows", (fx / "images/dog_00_0.png").string(), "--config", (fx / "config.json").string(),
                        "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_json(out / "dog_00_0_windows.json")["box_source"], "detector");
}

fs::path ten_image_manifest(const TempDir& dir) {
    std::vector<LabeledImage> rows;
    fs::create_directories(dir / "src");
    for (int i = 0; i < 10; ++i) {
        Image img(24, 24, static_cast<std::uint8_t>(20 * i));
        img.at(i, 2 * i, 0) = 255;
        const std::string name = "src/w" + std::to_string(i) + ".png";
        save_png(img, dir / name);
        rows.push_back({name, IdentityId(i < 5 ? "a" : "b")});
    }
    write_manifest(DatasetManifest(rows, dir.path()), dir / "windows.csv");
    return dir / "windows.csv";
}

TEST_F(CliTest, AugmentFactorSixteen) {
    const auto manifest = ten_image_manifest(dir);
    const auto out = dir / "aug";
    const auto r = cli({"augment", manifest.string(), "--out", out.string(), "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(out)) pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 160u);
    const auto m = load_manifest(out / "manifest.csv");
    EXPECT_EQ(m.size(), 160u);
    EXPECT_TRUE(load_image(out / "w3_aug0.png").same_pixels(load_image(dir / "src/w3.png")));
    EXPECT_EQ(read_json(out / "augment.json")["outputs"], 160);
}

TEST_F(CliTest, AugmentFactorOneCopies) {
    const auto manifest = ten_image_manifest(dir);
    const auto out = dir / "aug";
    ASSERT_EQ(cli({"augment", manifest.string(), "--out", out.string(), "--factor", "1"}).code, 0);
    const auto m = load_manifest(out / "manifest.csv");
    ASSERT_EQ(m.size(), 10u);
    for (int i = 0; i < 10; ++i) {
        const auto stem = "w" + std::to_string(i);
        EXPECT_TRUE(load_image(out / (stem + "_aug0.png")).same_pixels(load_image(dir / ("src/" + stem + ".png"))));
    }
}

TEST_F(CliTest, AugmentRerunIsByteIdentical) {
    const auto manifest = ten_image_manifest(dir);
    ASSERT_EQ(cli({"augment", manifest.string(), "--out", (dir / "a1").string(), "--factor", "3", "--seed", "9"}).code, 0);
    ASSERT_EQ(cli({"augment", manifest.string(), "--out", (dir / "a2").string(), "--factor", "3", "--seed", "9",
                   "--jobs", "3"})
                  .code,
              0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir / "a1")) {
        if (e.path().extension() != ".png") continue;
        ASSERT_EQ(slurp(e.path()), slurp(dir / "a2" / e.path().filename())) << e.path();
        ++compared;
    }
    EXPECT_EQ(compared, 30u);
    EXPECT_EQ(slurp(dir / "a1/manifest.csv"), slurp(dir / "a2/manifest.csv"));
}

TEST_F(CliTest, IdentifyScripted) {
    const auto fx = make_fixtures("fx");
    const auto r = cli({"identify", (fx / "images/dog_02_3.png").string(), "--config", (fx / "config.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto docs = json_lines(r.out);
    ASSERT_EQ(docs.size(), 1u);
    EXPECT_EQ(docs[0]["schema"], "petident-prediction/1");
    EXPECT_EQ(docs[0]["prediction"]["identity"], "dog_02");
    EXPECT_TRUE(docs[0]["reason"].is_null());
}

TEST_F(CliTest, IdentifyNoDog) {
    const auto fx = make_fixtures("fx", {"--no-detection", "20", "--correct-fraction", "0"});
    const auto r = cli({"identify", (fx / "images/dog_00_0.png").string(), "--config", (fx / "config.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto docs = json_lines(r.out);
    ASSERT_EQ(docs.size(), 1u);
    EXPECT_EQ(docs[0]["reason"], "no_dog_detected");
    EXPECT_TRUE(docs[0]["prediction"].is_null());
}

TEST_F(CliTest, IdentifyAllDogs) {
    const auto fx = make_fixtures("fx");
    const auto r = cli({"identify", (fx / "images/dog_00_0.png").string(), "--config", (fx / "config.json").string(),
                        "--all-dogs"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GE(json_lines(r.out)[0]["predictions"].size(), 1u);
}

TEST_F(CliTest, IdentifyMissingModelIsStageAttributed) {
    const auto fx = make_fixtures("fx");
    const auto r = cli({"identify", (fx / "images/dog_00_0.png").string(), "--detector-table",
                        (fx / "detections.csv").string(), "--classifier-model", (dir / "absent.onnx").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("[classify]"), std::string::npos) << r.err;

    const auto r2 = cli({"identify", (fx / "images/dog_00_0.png").string(), "--detector-model",
                         (dir / "absent.onnx").string(), "--label-map", (dir / "labels.txt").string()});
    EXPECT_EQ(r2.code, 1);
    EXPECT_NE(r2.err.find("[detect]"), std::string::npos) << r2.err;
}

TEST_F(CliTest, EvaluatePerfectMock) {
    const auto fx = make_fixtures("fx");
    const auto report = dir / "report.json";
    const auto r = cli({"evaluate", (fx / "manifest.csv").string(), "--config", (fx / "config.json").string(),
                        "--k", "5", "--out", report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = read_json(report);
    EXPECT_DOUBLE_EQ(doc["mean_accuracy"].get<double>(), 1.0);
    EXPECT_EQ(doc["per_fold_accuracy"].size(), 5u);
    EXPECT_EQ(doc["config"]["cv_k"], 5);
    EXPECT_NE(r.out.find("mean_accuracy=1.000000"), std::string::npos);
}

TEST_F(CliTest, EvaluateConstantPredictor) {
    std::vector<std::string> args{"fixtures", "--out", (dir / "c").string(), "--num-identities", "4",
                                  "--per-identity", "4", "--constant-class", "0"};
    ASSERT_EQ(cli(args).code, 0);
    const auto report = dir / "report.json";
    const auto r = cli({"evaluate", (dir / "c/manifest.csv").string(), "--config", (dir / "c/config.json").string(),
                        "--k", "4", "--out", report.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_DOUBLE_EQ(read_json(report)["mean_accuracy"].get<double>(), 0.25);
}

TEST_F(CliTest, FoldsThenEvaluateAndMismatch) {
    const auto fx = make_fixtures("fx");
    const auto folds = dir / "folds.json";
    const auto r = cli({"folds", (fx / "manifest.csv").string(), "--k", "5", "--seed", "3", "--out", folds.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = read_json(folds);
    EXPECT_EQ(doc["k"], 5);
    EXPECT_EQ(doc["validation"]["valid"], true);

    const auto ok = cli({"evaluate", (fx / "manifest.csv").string(), "--config", (fx / "config.json").string(),
                         "--folds", folds.string(), "--out", (dir / "r.json").string()});
    ASSERT_EQ(ok.code, 0) << ok.err;

    const auto other = make_fixtures("other", {"--per-identity", "6"});
    const auto bad = cli({"evaluate", (other / "manifest.csv").string(), "--config", (other / "config.json").string(),
                          "--folds", folds.string(), "--out", (dir / "r2.json").string()});
    EXPECT_EQ(bad.code, 1);
    EXPECT_FALSE(fs::exists(dir / "r2.json"));
}

TEST_F(CliTest, FoldsReportsDeficiencies) {
    const auto fx = make_fixtures("fx");
    const auto r = cli({"folds", (fx / "manifest.csv").string(), "--k", "2", "--min-images", "6", "--out",
                        (dir / "f.json").string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    EXPECT_EQ(read_json(dir / "f.json")["validation"]["deficiencies"].size(), 4u);
    EXPECT_EQ(cli({"folds", (fx / "manifest.csv").string(), "--k", "100", "--out", (dir / "g.json").string()}).code,
              1);
}

TEST_F(CliTest, ConfigFileErrorsAndOverrides) {
    std::ofstream(dir / "bad.json") << R"({"seeed": 3})";
    EXPECT_EQ(cli({"detect", "x.png", "--config", (dir / "bad.json").string()}).code, 1);
    EXPECT_EQ(cli({"detect", "x.png", "--config", (dir / "absent.json").string()}).code, 1);
    EXPECT_EQ(cli({"detect", "--voting", "mean"}).code, 1);

    std::ofstream(dir / "good.json") << R"({"seed": 3, "min_confidence": 0.6, "augmentation": {"factor": 4}})";
    auto config = PipelineConfig::load(dir / "good.json");
    EXPECT_EQ(config.seed, 3u);
    EXPECT_DOUBLE_EQ(config.min_confidence, 0.6);
    EXPECT_EQ(config.augmentation_factor, 4);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"augmentation": {"zoom": 2}})")), ConfigError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"min_confidence": "high"})")), ConfigError);

    const auto round = PipelineConfig::from_json(config.to_json());
    EXPECT_EQ(round.to_json(), config.to_json());
}

}  // namespace
}  // namespace petident::cli
