#include "petident/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "petident/random.hpp"

namespace petident {

namespace fs = std::filesystem;

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

Rgb identity_color(std::size_t id) {
    DeterministicRng rng(mix_seed(0x5eed, id));
    return {static_cast<std::uint8_t>(60 + rng.below(180)), static_cast<std::uint8_t>(40 + rng.below(160)),
            static_cast<std::uint8_t>(20 + rng.below(140))};
}

void draw_background(Image& img, DeterministicRng& rng) {
    const int base = static_cast<int>(rng.below(80)) + 100;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int noise = static_cast<int>(rng.below(21)) - 10;
            const int g = std::clamp(base + (x + y) / 4 + noise, 0, 255);
            img.at(x, y, 0) = static_cast<std::uint8_t>(g / 2);
            img.at(x, y, 1) = static_cast<std::uint8_t>(g);
            img.at(x, y, 2) = static_cast<std::uint8_t>(g / 3);
        }
    }
}

// Ellipse filling `box`, coat color per identity with identity-specific spots.
void draw_dog(Image& img, const BoundingBox& box, std::size_t id) {
    const Rgb coat = identity_color(id);
    const double cx = box.x + box.w / 2.0;
    const double cy = box.y + box.h / 2.0;
    const double rx = box.w / 2.0;
    const double ry = box.h / 2.0;
    const int spot_period = 5 + static_cast<int>(id % 7);
    for (int y = box.y; y < box.bottom(); ++y) {
        for (int x = box.x; x < box.right(); ++x) {
            const double u = (x + 0.5 - cx) / rx;
            const double v = (y + 0.5 - cy) / ry;
            if (u * u + v * v > 1.0) continue;
            const bool spot = ((x - box.x) / spot_period + (y - box.y) / spot_period) % 3 == 0;
            const double shade = spot ? 0.55 : 1.0;
            img.at(x, y, 0) = static_cast<std::uint8_t>(coat.r * shade);
            img.at(x, y, 1) = static_cast<std::uint8_t>(coat.g * shade);
            img.at(x, y, 2) = static_cast<std::uint8_t>(coat.b * shade);
        }
    }
}

BoundingBox random_box(DeterministicRng& rng, int width, int height, int min_side) {
    const double aspect = rng.uniform(0.4, 2.5);  // w / h
    int h = static_cast<int>(rng.uniform(min_side, height * 0.9));
    int w = static_cast<int>(h * aspect);
    if (w > width - 2) {
        w = width - 2;
        h = std::max(min_side / 2, std::min(h, static_cast<int>(w / aspect)));
    }
    w = std::max(w, min_side / 2);
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - w) + 1));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - h) + 1));
    return {x, y, w, h};
}

// Score vector over `k` classes whose argmax is `label`.
std::vector<double> scripted_scores(DeterministicRng& rng, std::size_t k, std::size_t label) {
    std::vector<double> s(k, 0.0);
    const double top = rng.uniform(0.55, 0.85);
    std::vector<double> weights(k, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (c == label) continue;
        weights[c] = 0.05 + rng.uniform01();
        total += weights[c];
    }
    for (std::size_t c = 0; c < k; ++c) s[c] = c == label ? top : (1.0 - top) * weights[c] / total;
    return s;
}

std::size_t other_label(DeterministicRng& rng, std::size_t k, std::size_t truth) {
    return (truth + 1 + rng.below(k - 1)) % k;
}

}  // namespace

std::size_t FixtureSet::scripted_correct() const {
    return static_cast<std::size_t>(
        std::count_if(images.begin(), images.end(), [](const auto& f) { return f.scripted_correct; }));
}

ScriptedDetector FixtureSet::detector() const {
    ScriptedDetector det;
    for (const auto& f : images) {
        for (const auto& d : f.detections) det.add(f.path, d);
    }
    return det;
}

MockClassifier FixtureSet::classifier(int input_side) const {
    MockClassifier mock(input_side, identities);
    for (const auto& f : images) {
        if (!f.has_dog) continue;
        for (std::size_t w = 0; w < kWindowCount; ++w) mock.script(f.path, static_cast<int>(w), f.window_scores[w]);
    }
    return mock;
}

FixtureSet generate_fixture_set(const FixtureOptions& opt) {
    if (opt.num_identities < 2) throw std::invalid_argument("fixtures need at least 2 identities");
    if (opt.images_per_identity < 1) throw std::invalid_argument("fixtures need at least 1 image per identity");
    if (!(opt.correct_fraction >= 0.0 && opt.correct_fraction <= 1.0)) {
        throw std::invalid_argument("correct_fraction must be in [0,1]");
    }
    if (opt.constant_class && *opt.constant_class >= opt.num_identities) {
        throw std::invalid_argument("constant_class out of range");
    }
    if (opt.min_side < 32 || opt.max_side < opt.min_side) throw std::invalid_argument("bad fixture image size range");

    const std::size_t k = opt.num_identities;
    const std::size_t n = k * opt.images_per_identity;
    if (opt.no_detection_images > n) throw std::invalid_argument("more no-detection images than images");
    const auto target_correct = static_cast<std::size_t>(std::llround(opt.correct_fraction * static_cast<double>(n)));
    if (!opt.constant_class && target_correct > n - opt.no_detection_images) {
        throw std::invalid_argument("correct_fraction leaves too few images for the no-detection count");
    }

    FixtureSet set;
    char name[64];
    for (std::size_t c = 0; c < k; ++c) {
        std::snprintf(name, sizeof name, "dog_%02zu", c);
        set.identities.emplace_back(name);
    }

    // Decide which images are no-dog and which are scripted to vote correctly.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    DeterministicRng plan(mix_seed(opt.seed, 0x91a2));
    plan.shuffle(std::span<std::size_t>(order));
    std::vector<bool> no_dog(n, false);
    std::vector<bool> correct(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < opt.no_detection_images) no_dog[order[i]] = true;
        else if (i < opt.no_detection_images + target_correct) correct[order[i]] = true;
    }

    std::vector<LabeledImage> entries;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < opt.images_per_identity; ++j) {
            const std::size_t idx = c * opt.images_per_identity + j;
            DeterministicRng rng(mix_seed(opt.seed, 0x1000 + idx));
            const int width = static_cast<int>(rng.uniform(opt.min_side, opt.max_side));
            const int height = static_cast<int>(rng.uniform(opt.min_side, opt.max_side));

            std::snprintf(name, sizeof name, "images/dog_%02zu_%zu.png", c, j);
            FixtureImage f{name, set.identities[c], Image(width, height), {}, {}, !no_dog[idx], false};
            f.image.source = f.path;
            draw_background(f.image, rng);

            if (rng.uniform01() < 0.3) {
                // distractor that filter_dogs must drop
                f.detections.push_back({random_box(rng, width, height, 24), "person", 0.95});
            }
            if (f.has_dog) {
                const auto box = random_box(rng, width, height, 32);
                draw_dog(f.image, box, c);
                f.detections.push_back({box, std::string(kDogLabel), rng.uniform(0.8, 0.99)});
                if (rng.uniform01() < 0.2) {
                    const auto second = random_box(rng, width, height, 24);
                    f.detections.push_back({second, std::string(kDogLabel), rng.uniform(0.5, 0.7)});
                }

                std::array<std::size_t, kWindowCount> labels{};
                if (opt.constant_class) {
                    labels.fill(*opt.constant_class);
                } else if (correct[idx]) {
                    labels.fill(c);
                    if (rng.uniform01() < 0.25) labels[rng.below(kWindowCount)] = other_label(rng, k, c);
                } else {
                    const std::size_t wrong = other_label(rng, k, c);
                    labels.fill(wrong);
                    if (rng.uniform01() < 0.25) labels[rng.below(kWindowCount)] = c;
                }
                for (std::size_t w = 0; w < kWindowCount; ++w) f.window_scores[w] = scripted_scores(rng, k, labels[w]);
                // Majority of the three labels decides; tally it directly.
                const std::size_t winner = labels[0] == labels[1] || labels[0] == labels[2] ? labels[0] : labels[1];
                f.scripted_correct = winner == c;
            }
            entries.push_back({fs::path(f.path), f.identity});
            set.images.push_back(std::move(f));
        }
    }
    set.manifest = DatasetManifest(std::move(entries));
    return set;
}

FixturePaths write_fixture_set(const FixtureSet& set, const fs::path& dir) {
    fs::create_directories(dir / "images");
    FixturePaths paths{dir / "manifest.csv", dir / "detections.csv", dir / "scores.csv", dir / "identities.txt"};

    std::map<std::string, std::vector<Detection>> dets;
    std::map<std::pair<std::string, int>, std::vector<double>> scores;
    for (const auto& f : set.images) {
        save_png(f.image, dir / f.path);
        dets[f.path] = f.detections;
        if (!f.has_dog) continue;
        for (std::size_t w = 0; w < kWindowCount; ++w) scores[{f.path, static_cast<int>(w)}] = f.window_scores[w];
    }
    write_manifest(set.manifest, paths.manifest);
    write_detection_table(dets, paths.detections);
    write_score_table(scores, paths.scores);
    write_identities(set.identities, paths.identities);
    return paths;
}

}  // namespace petident
