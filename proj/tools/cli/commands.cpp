#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "petident/augmentation.hpp"
#include "petident/dataset.hpp"
#include "petident/errors.hpp"
#include "petident/evaluation.hpp"
#include "petident/fixtures.hpp"
#include "petident/identification.hpp"
#include "petident/parallel.hpp"
#include "petident/windowing.hpp"
#include "pipeline_config.hpp"

namespace petident::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by every subcommand. Anything set here wins over the config file.
struct CommonFlags {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<double> min_confidence;
    std::optional<int> input_side;
    std::optional<std::string> detector_table;
    std::optional<std::string> classifier_table;
    std::optional<std::string> identities;
    std::optional<std::string> detector_model;
    std::optional<std::string> label_map;
    std::optional<std::string> classifier_model;
    std::optional<std::string> voting;
    std::optional<std::size_t> k;
    std::optional<int> factor;
    bool all_dogs = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& out_help) {
    cmd->add_option("--config", f.config_path, "JSON configuration file");
    cmd->add_option("--out", f.out, out_help);
    cmd->add_option("--seed", f.seed, "Seed for every random draw");
    cmd->add_option("--jobs", f.jobs, "Maximum concurrent inputs")->check(CLI::PositiveNumber);
    cmd->add_option("--min-confidence", f.min_confidence, "Dog detection threshold");
    cmd->add_option("--input-side", f.input_side, "Classifier window side in pixels");
    cmd->add_option("--detector-table", f.detector_table, "Scripted detections CSV");
    cmd->add_option("--classifier-table", f.classifier_table, "Scripted window scores CSV");
    cmd->add_option("--identities", f.identities, "Identity list, one per line");
    cmd->add_option("--detector-model", f.detector_model, "ONNX detector");
    cmd->add_option("--label-map", f.label_map, "Detector label map");
    cmd->add_option("--classifier-model", f.classifier_model, "ONNX classifier ({fold} expands per fold)");
    cmd->add_option("--voting", f.voting, "max_single or sum_scores");
}

PipelineConfig resolve_config(const CommonFlags& f) {
    PipelineConfig c = f.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(f.config_path);
    if (f.seed) c.seed = *f.seed;
    if (f.jobs) c.jobs = *f.jobs;
    if (f.min_confidence) c.min_confidence = *f.min_confidence;
    if (f.input_side) c.input_side = *f.input_side;
    if (f.detector_table) c.detector_table = *f.detector_table;
    if (f.classifier_table) c.classifier_table = *f.classifier_table;
    if (f.identities) c.identities_path = *f.identities;
    if (f.detector_model) c.detector_model_path = *f.detector_model;
    if (f.label_map) c.label_map_path = *f.label_map;
    if (f.classifier_model) c.classifier_model_path = *f.classifier_model;
    if (f.voting) {
        try {
            c.voting_variant = parse_voting_variant(*f.voting);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (f.k) c.cv_k = *f.k;
    if (f.factor) c.augmentation_factor = *f.factor;
    if (f.all_dogs) c.all_dogs = true;
    c.validate();
    return c;
}

/// Error tagged with the stage it came from, reported as "error [stage]: ...".
struct StageFailure : Error {
    StageFailure(std::string stage_name, const std::string& what) : Error(what), stage(std::move(stage_name)) {}
    std::string stage;
};

template <typename F>
auto setup(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(stage, e.what());
    }
}

std::unique_ptr<DetectorBackend> setup_detector(const PipelineConfig& c) {
    return setup("detect", [&] { return make_detector(c); });
}

std::unique_ptr<ClassifierBackend> setup_classifier(const PipelineConfig& c, const std::vector<IdentityId>& ids = {},
                                                    std::optional<std::size_t> fold = std::nullopt) {
    return setup("classify", [&] { return make_classifier(c, ids, fold); });
}

json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

// Output file stem per input, disambiguated when two inputs share a stem.
std::vector<std::string> unique_stems(const std::vector<fs::path>& paths) {
    std::vector<std::string> stems;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        std::string stem = paths[i].stem().string();
        if (!seen.insert(stem).second) {
            stem += "_" + std::to_string(i);
            seen.insert(stem);
        }
        stems.push_back(std::move(stem));
    }
    return stems;
}

struct ItemResult {
    std::optional<json> doc;
    std::string error;
};

// Runs `work` over the inputs with the configured concurrency and emits results in input order.
template <typename Work>
int process_images(const std::vector<std::string>& images, const PipelineConfig& config, const std::string& out_dir,
                   const char* suffix, std::ostream& out, std::ostream& err, Work&& work) {
    std::vector<ItemResult> results(images.size());
    parallel_for(images.size(), config.jobs, [&](std::size_t i) {
        try {
            results[i].doc = work(images[i]);
        } catch (const PipelineError& e) {
            results[i].error = std::string("[") + std::string(to_string(e.stage())) + "] " + e.what();
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    });

    std::vector<fs::path> paths(images.begin(), images.end());
    const auto stems = unique_stems(paths);
    if (!out_dir.empty()) fs::create_directories(out_dir);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!results[i].doc) {
            ++failures;
            err << "failed: " << images[i] << ": " << results[i].error << '\n';
            continue;
        }
        if (out_dir.empty()) out << results[i].doc->dump() << '\n';
        else write_json(*results[i].doc, fs::path(out_dir) / (stems[i] + suffix));
    }
    return failures ? kExitPartial : kExitOk;
}

int cmd_detect(const std::vector<std::string>& images, const PipelineConfig& config, const CommonFlags& flags,
               std::ostream& out, std::ostream& err) {
    if (images.empty()) return kExitOk;
    auto detector = setup_detector(config);
    const auto echo = config.to_json();
    return process_images(images, config, flags.out, ".detections.json", out, err, [&](const std::string& path) {
        const auto image = load_image(path);
        json dets = json::array();
        for (const auto& d : detect(image, *detector)) dets.push_back(to_json(d));
        return json{{"schema", "petident-detections/1"},
                    {"image", path},
                    {"width", image.width},
                    {"height", image.height},
                    {"detections", std::move(dets)},
                    {"config", echo}};
    });
}

BoundingBox parse_box(const std::string& text) {
    std::array<int, 4> v{};
    std::istringstream is(text);
    char sep = 0;
    if (!(is >> v[0] >> sep >> v[1] >> sep >> v[2] >> sep >> v[3]) || !is.eof()) {
        throw ConfigError("--box must be x,y,w,h");
    }
    return {v[0], v[1], v[2], v[3]};
}

int cmd_windows(const std::string& image_path, const std::string& box_text, const PipelineConfig& config,
                const CommonFlags& flags, std::ostream& out, std::ostream& err) {
    const fs::path out_dir = flags.out.empty() ? fs::path(".") : fs::path(flags.out);
    Image image;
    try {
        image = load_image(image_path);
    } catch (const Error& e) {
        err << "failed: " << image_path << ": " << e.what() << '\n';
        return kExitPartial;
    }

    std::optional<BoundingBox> box;
    std::string box_source = "argument";
    if (!box_text.empty()) {
        const auto requested = parse_box(box_text);
        if (requested.empty()) throw ConfigError("zero-area box " + box_text);
        box = clamp_box(requested, image.width, image.height);
        if (!box) throw ConfigError("box " + box_text + " lies outside the image");
    } else {
        auto detector = setup_detector(config);
        const auto dets = detect(image, *detector);
        const auto primary = select_primary(filter_dogs(dets, config.min_confidence, config.dog_class));
        if (!primary) {
            err << "failed: " << image_path << ": " << kNoDogDetected << '\n';
            return kExitPartial;
        }
        box = primary->box;
        box_source = "detector";
    }

    const auto windows = extract_windows(image, *box, config.input_side);
    fs::create_directories(out_dir);
    const auto stem = fs::path(image_path).stem().string();
    const bool horizontal = box->w >= box->h;
    json items = json::array();
    for (const auto& w : windows) {
        const auto file = stem + "_w" + std::to_string(w.ordinal) + ".png";
        save_png(w.pixels, out_dir / file);
        const int offset = horizontal ? w.region.x - box->x : w.region.y - box->y;
        items.push_back({{"ordinal", w.ordinal}, {"file", file}, {"region", box_json(w.region)}, {"offset", offset}});
    }
    const json doc{{"schema", "petident-windows/1"},
                   {"image", image_path},
                   {"box", box_json(*box)},
                   {"box_source", box_source},
                   {"input_side", config.input_side},
                   {"windows", std::move(items)},
                   {"config", config.to_json()}};
    write_json(doc, out_dir / (stem + "_windows.json"));
    out << (out_dir / (stem + "_windows.json")).string() << '\n';
    return kExitOk;
}

int cmd_augment(const std::string& manifest_path, const PipelineConfig& config, const CommonFlags& flags,
                std::ostream& out, std::ostream& err) {
    const auto manifest = load_manifest(manifest_path);
    const fs::path out_dir = flags.out.empty() ? fs::path("augmented") : fs::path(flags.out);
    fs::create_directories(out_dir);
    const auto spec = config.augmentation_spec();
    const int variants = variants_per_item(config.augmentation_factor, config.augmentation_mode);

    std::vector<fs::path> paths;
    for (const auto& e : manifest.entries()) paths.push_back(e.image_path);
    const auto stems = unique_stems(paths);

    std::vector<std::string> errors(manifest.size());
    parallel_for(manifest.size(), config.jobs, [&](std::size_t i) {
        try {
            const auto image = load_image(manifest.resolve(i));
            save_png(image, out_dir / (stems[i] + "_aug0.png"));
            for (int j = 1; j <= variants; ++j) {
                const auto draw = i * static_cast<std::uint64_t>(variants) + static_cast<std::uint64_t>(j);
                save_png(augment_image(image, spec, draw), out_dir / (stems[i] + "_aug" + std::to_string(j) + ".png"));
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::vector<LabeledImage> rows;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (!errors[i].empty()) {
            ++failures;
            err << "failed: " << manifest.entries()[i].image_path.generic_string() << ": " << errors[i] << '\n';
            continue;
        }
        for (int j = 0; j <= variants; ++j) {
            rows.push_back({fs::path(stems[i] + "_aug" + std::to_string(j) + ".png"), manifest.entries()[i].identity});
        }
    }
    if (!rows.empty()) write_manifest(DatasetManifest(rows, out_dir), out_dir / "manifest.csv");
    write_json({{"schema", "petident-augment/1"},
                {"source_manifest", manifest_path},
                {"inputs", manifest.size()},
                {"outputs", rows.size()},
                {"failed", failures},
                {"variants_per_item", variants},
                {"config", config.to_json()}},
               out_dir / "augment.json");
    out << rows.size() << " images written to " << out_dir.string() << '\n';
    return failures ? kExitPartial : kExitOk;
}

int cmd_identify(const std::vector<std::string>& images, const PipelineConfig& config, const CommonFlags& flags,
                 std::ostream& out, std::ostream& err) {
    if (images.empty()) return kExitOk;
    auto detector = setup_detector(config);
    auto classifier = setup_classifier(config);
    const auto identify_cfg = config.identify_config();
    const auto echo = config.to_json();
    return process_images(images, config, flags.out, ".prediction.json", out, err, [&](const std::string& path) {
        const auto image = load_image(path);
        json doc{{"schema", "petident-prediction/1"}, {"image", path}};
        if (config.all_dogs) {
            json preds = json::array();
            for (const auto& p : identify_all(image, *detector, *classifier, identify_cfg)) preds.push_back(to_json(p));
            doc["reason"] = preds.empty() ? json(kNoDogDetected) : json(nullptr);
            doc["predictions"] = std::move(preds);
        } else {
            const auto outcome = identify(image, *detector, *classifier, identify_cfg);
            doc["prediction"] = outcome.prediction ? to_json(*outcome.prediction) : json(nullptr);
            doc["reason"] = outcome.prediction ? json(nullptr) : json(outcome.reason);
        }
        doc["config"] = echo;
        return doc;
    });
}

int cmd_evaluate(const std::string& manifest_path, const std::string& folds_path, const PipelineConfig& config,
                 const CommonFlags& flags, std::ostream& out, std::ostream&) {
    const auto manifest = load_manifest(manifest_path);
    const auto folds = folds_path.empty() ? [&] {
        try {
            return make_folds(manifest, config.cv_k, config.seed);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }()
                                          : read_folds(folds_path, manifest);
    auto detector = setup_detector(config);

    const auto& ids = manifest.registry().ids();
    const bool per_fold = config.classifier_table.empty() &&
                          config.classifier_model_path.find("{fold}") != std::string::npos;
    std::shared_ptr<ClassifierBackend> shared;
    if (!per_fold) shared = setup_classifier(config, ids);

    ClassifierFactory factory = [&](std::size_t fold, std::span<const std::size_t>) -> std::shared_ptr<ClassifierBackend> {
        if (shared) return shared;
        return setup_classifier(config, ids, fold);
    };

    EvaluationOptions options;
    options.identify = config.identify_config();
    options.jobs = config.jobs;
    options.config_echo = config.to_json();
    if (config.protocol == EvaluationProtocol::holdout) options.single_fold = config.holdout_fold;

    const auto report = evaluate(manifest, folds, *detector, factory, options);
    const fs::path report_path = flags.out.empty() ? fs::path("report.json") : fs::path(flags.out);
    write_report(report, report_path);

    std::ostringstream summary;
    summary.precision(6);
    summary << std::fixed << "mean_accuracy=" << report.mean_accuracy << " overall_accuracy=" << report.overall_accuracy
            << " evaluated=" << report.records.size() << " folds=" << report.evaluated_folds.size()
            << " report=" << report_path.string();
    out << summary.str() << '\n';
    return kExitOk;
}

int cmd_folds(const std::string& manifest_path, std::size_t min_images, const PipelineConfig& config,
              const CommonFlags& flags, std::ostream& out, std::ostream& err) {
    const auto manifest = load_manifest(manifest_path);
    const auto validation = validate_manifest(manifest, min_images);
    for (const auto& [id, count] : validation.deficiencies) {
        err << "warning: identity " << id.str() << " has " << count << " images (< " << min_images << ")\n";
    }
    FoldAssignment folds;
    try {
        folds = make_folds(manifest, config.cv_k, config.seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    auto doc = folds_to_json(folds, manifest);
    json deficiencies = json::object();
    for (const auto& [id, count] : validation.deficiencies) deficiencies[id.str()] = count;
    doc["validation"] = {{"min_images", min_images}, {"valid", validation.valid()}, {"deficiencies", deficiencies}};
    doc["config"] = config.to_json();
    const fs::path path = flags.out.empty() ? fs::path("folds.json") : fs::path(flags.out);
    write_json(doc, path);
    out << "k=" << folds.k << " sizes=" << json(folds.fold_sizes()).dump() << " folds=" << path.string() << '\n';
    return kExitOk;
}

struct FixtureFlags {
    std::size_t identities = 16;
    std::size_t per_identity = 5;
    double correct_fraction = 1.0;
    std::optional<std::size_t> constant_class;
    std::size_t no_detection = 0;
};

int cmd_fixtures(const FixtureFlags& ff, const PipelineConfig& config, const CommonFlags& flags, std::ostream& out) {
    const fs::path dir = flags.out.empty() ? fs::path("fixtures") : fs::path(flags.out);
    FixtureOptions opt;
    opt.num_identities = ff.identities;
    opt.images_per_identity = ff.per_identity;
    opt.seed = config.seed;
    opt.correct_fraction = ff.correct_fraction;
    opt.constant_class = ff.constant_class;
    opt.no_detection_images = ff.no_detection;
    FixtureSet set;
    try {
        set = generate_fixture_set(opt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto paths = write_fixture_set(set, dir);
    write_json({{"detector_table", paths.detections.filename().string()},
                {"classifier_table", paths.scores.filename().string()},
                {"identities_path", paths.identities.filename().string()},
                {"input_side", config.input_side},
                {"seed", config.seed}},
               dir / "config.json");
    out << set.images.size() << " images, " << set.identities.size() << " identities, " << set.scripted_correct()
        << " scripted correct, written to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"petident: detect dogs, cut three square windows, classify and vote on identity"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonFlags flags;
    std::vector<std::string> images;
    std::string image;
    std::string box;
    std::string manifest;
    std::string folds_file;
    std::size_t min_images = kDefaultMinImages;
    FixtureFlags fixture_flags;

    auto* detect_cmd = app.add_subcommand("detect", "Run the detector and write one document per image");
    detect_cmd->add_option("images", images, "Input images");
    add_common(detect_cmd, flags, "Output directory (default: JSON lines on stdout)");

    auto* windows_cmd = app.add_subcommand("windows", "Write the three square windows of a dog box");
    windows_cmd->add_option("image", image, "Input image")->required();
    windows_cmd->add_option("--box", box, "x,y,w,h (default: primary dog from the detector)");
    add_common(windows_cmd, flags, "Output directory (default: .)");

    auto* augment_cmd = app.add_subcommand("augment", "Expand a manifest of window images by the augmentation factor");
    augment_cmd->add_option("manifest", manifest, "Input manifest CSV")->required();
    augment_cmd->add_option("--factor", flags.factor, "Output size as a multiple of the input size");
    add_common(augment_cmd, flags, "Output directory (default: augmented)");

    auto* identify_cmd = app.add_subcommand("identify", "Identify the dog in each image");
    identify_cmd->add_option("images", images, "Input images");
    identify_cmd->add_flag("--all-dogs", flags.all_dogs, "Identify every dog detection, not only the primary");
    add_common(identify_cmd, flags, "Output directory (default: JSON lines on stdout)");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "k-fold evaluation over a manifest");
    evaluate_cmd->add_option("manifest", manifest, "Manifest CSV")->required();
    evaluate_cmd->add_option("--folds", folds_file, "Folds document from `petident folds`");
    evaluate_cmd->add_option("--k", flags.k, "Fold count when no folds file is given");
    add_common(evaluate_cmd, flags, "Report path (default: report.json)");

    auto* folds_cmd = app.add_subcommand("folds", "Validate a manifest and write a stratified fold assignment");
    folds_cmd->add_option("manifest", manifest, "Manifest CSV")->required();
    folds_cmd->add_option("--k", flags.k, "Fold count");
    folds_cmd->add_option("--min-images", min_images, "Images required per identity")->check(CLI::PositiveNumber);
    add_common(folds_cmd, flags, "Folds path (default: folds.json)");

    auto* fixtures_cmd = app.add_subcommand("fixtures", "Generate a synthetic fixture set");
    fixtures_cmd->add_option("--num-identities", fixture_flags.identities, "Identity count");
    fixtures_cmd->add_option("--per-identity", fixture_flags.per_identity, "Images per identity");
    fixtures_cmd->add_option("--correct-fraction", fixture_flags.correct_fraction,
                             "Fraction of images scripted to vote correctly");
    fixtures_cmd->add_option("--constant-class", fixture_flags.constant_class, "Script every window to this class");
    fixtures_cmd->add_option("--no-detection", fixture_flags.no_detection, "Images scripted without a dog");
    add_common(fixtures_cmd, flags, "Output directory (default: fixtures)");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFatal;
    }

    try {
        const auto config = resolve_config(flags);
        if (detect_cmd->parsed()) return cmd_detect(images, config, flags, out, err);
        if (windows_cmd->parsed()) return cmd_windows(image, box, config, flags, out, err);
        if (augment_cmd->parsed()) return cmd_augment(manifest, config, flags, out, err);
        if (identify_cmd->parsed()) return cmd_identify(images, config, flags, out, err);
        if (evaluate_cmd->parsed()) return cmd_evaluate(manifest, folds_file, config, flags, out, err);
        if (folds_cmd->parsed()) return cmd_folds(manifest, min_images, config, flags, out, err);
        if (fixtures_cmd->parsed()) return cmd_fixtures(fixture_flags, config, flags, out);
    } catch (const StageFailure& e) {
        err << "error [" << e.stage << "]: " << e.what() << '\n';
        return kExitFatal;
    } catch (const PipelineError& e) {
        err << "error [" << to_string(e.stage()) << "]: " << e.what() << '\n';
        return kExitPartial;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFatal;
    } catch (const ManifestError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFatal;
    } catch (const BackendError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFatal;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitPartial;
    }
    return kExitFatal;
}

}  // namespace petident::cli
