#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "petident/dataset.hpp"
#include "petident/errors.hpp"
#include "temp_dir.hpp"

namespace petident {
namespace {

using testing::TempDir;

std::filesystem::path write_text(const TempDir& dir, const std::string& name, const std::string& text) {
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path;
}

DatasetManifest grid_manifest(std::size_t identities, std::size_t per_identity) {
    std::vector<LabeledImage> rows;
    for (std::size_t i = 0; i < identities; ++i) {
        for (std::size_t j = 0; j < per_identity; ++j) {
            rows.push_back({"img_" + std::to_string(i) + "_" + std::to_string(j) + ".jpg",
                            IdentityId("dog" + std::to_string(i))});
        }
    }
    return DatasetManifest(rows);
}

TEST(IdentityId, RejectsEmpty) {
    EXPECT_THROW(IdentityId(""), std::invalid_argument);
    EXPECT_EQ(IdentityId("rex").str(), "rex");
}

TEST(LoadManifest, FirstAppearanceIndexing) {
    TempDir dir;
    const auto path = write_text(dir, "m.csv", "image_path,identity_id\na.jpg,rex\nb.jpg,rex\nc.jpg,mia\n");
    const auto m = load_manifest(path);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m.registry().size(), 2u);
    EXPECT_EQ(m.registry().index_of(IdentityId("rex")), 0u);
    EXPECT_EQ(m.registry().index_of(IdentityId("mia")), 1u);
    EXPECT_EQ(m.class_of(2), 1u);
    EXPECT_EQ(m.resolve(0), dir.path() / "a.jpg");
}

TEST(LoadManifest, EmptyFile) {
    TempDir dir;
    try {
        load_manifest(write_text(dir, "m.csv", ""));
        FAIL() << "expected ManifestError";
    } catch (const ManifestError& e) {
        EXPECT_STREQ(e.what(), "empty manifest");
    }
    EXPECT_THROW(load_manifest(write_text(dir, "h.csv", "image_path,identity_id\n")), ManifestError);
}

TEST(LoadManifest, DuplicateRowNamesSecondRow) {
    TempDir dir;
    const auto path = write_text(dir, "m.csv", "image_path,identity_id\na.jpg,rex\na.jpg,rex\n");
    try {
        load_manifest(path);
        FAIL() << "expected ManifestError";
    } catch (const ManifestError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    }
}

TEST(LoadManifest, SplitColumnQuotingAndBom) {
    TempDir dir;
    const auto path = write_text(dir, "m.csv",
                                 "\xEF\xBB\xBFimage_path,identity_id,split\r\n"
                                 "\"dir, with comma/a.jpg\",rex,train\r\n\r\n"
                                 "b.jpg, mia ,test\r\n");
    const auto m = load_manifest(path);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.entries()[0].image_path, "dir, with comma/a.jpg");
    EXPECT_EQ(m.entries()[1].identity.str(), "mia");
}

TEST(LoadManifest, Errors) {
    TempDir dir;
    EXPECT_THROW(load_manifest(dir / "missing.csv"), ManifestError);
    EXPECT_THROW(load_manifest(write_text(dir, "h.csv", "path,id\na,b\n")), ManifestError);
    try {
        load_manifest(write_text(dir, "m.csv", "image_path,identity_id\na.jpg,rex\nb.jpg\n"));
        FAIL();
    } catch (const ManifestError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
    EXPECT_THROW(load_manifest(write_text(dir, "e.csv", "image_path,identity_id\na.jpg,\n")), ManifestError);
}

TEST(LoadManifest, WriteRoundTrip) {
    TempDir dir;
    const auto m = grid_manifest(3, 2);
    write_manifest(m, dir / "out.csv");
    const auto back = load_manifest(dir / "out.csv");
    EXPECT_EQ(back.entries(), m.entries());
    EXPECT_EQ(back.registry(), m.registry());
}

TEST(ValidateManifest, SixteenByFiveIsValid) {
    const auto r = validate_manifest(grid_manifest(16, 5), 5);
    EXPECT_TRUE(r.valid());
    EXPECT_TRUE(r.deficiencies.empty());
}

TEST(ValidateManifest, ReportsDeficientIdentity) {
    std::vector<LabeledImage> rows;
    for (int i = 0; i < 5; ++i) rows.push_back({"a" + std::to_string(i), IdentityId("rex")});
    for (int i = 0; i < 4; ++i) rows.push_back({"b" + std::to_string(i), IdentityId("mia")});
    const auto r = validate_manifest(DatasetManifest(rows), 5);
    EXPECT_FALSE(r.valid());
    ASSERT_EQ(r.deficiencies.size(), 1u);
    EXPECT_EQ(r.deficiencies[0].first.str(), "mia");
    EXPECT_EQ(r.deficiencies[0].second, 4u);
}

TEST(ValidateManifest, ThresholdOneIsVacuous) {
    EXPECT_TRUE(validate_manifest(grid_manifest(3, 1), 1).valid());
}

TEST(Folds, SixteenByFiveKFiveGivesOnePerIdentityPerFold) {
    const auto m = grid_manifest(16, 5);
    for (std::uint64_t seed : {0ULL, 1ULL, 987654321ULL}) {
        const auto f = make_folds(m, 5, seed);
        for (std::size_t fold = 0; fold < 5; ++fold) {
            const auto members = f.members(fold);
            ASSERT_EQ(members.size(), 16u);
            std::set<std::size_t> classes;
            for (auto i : members) classes.insert(m.class_of(i));
            EXPECT_EQ(classes.size(), 16u);
        }
    }
}

TEST(Folds, FewerImagesThanFolds) {
    std::vector<LabeledImage> rows;
    for (int i = 0; i < 3; ++i) rows.push_back({"a" + std::to_string(i), IdentityId("rex")});
    for (int i = 0; i < 10; ++i) rows.push_back({"b" + std::to_string(i), IdentityId("mia")});
    const auto m = DatasetManifest(rows);
    const auto f = make_folds(m, 10, 5);
    std::set<std::size_t> folds;
    for (std::size_t i = 0; i < 3; ++i) folds.insert(f.fold_of[i]);
    EXPECT_EQ(folds.size(), 3u);
}

TEST(Folds, Deterministic) {
    const auto m = grid_manifest(16, 5);
    EXPECT_EQ(make_folds(m, 10, 17), make_folds(m, 10, 17));
    EXPECT_NE(make_folds(m, 10, 17).fold_of, make_folds(m, 10, 18).fold_of);
}

TEST(Folds, InvalidK) {
    const auto m = grid_manifest(2, 2);
    EXPECT_THROW(make_folds(m, 1, 0), std::invalid_argument);
    EXPECT_THROW(make_folds(m, 5, 0), std::invalid_argument);
}

TEST(Folds, PartitionAndStratificationProperty) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t ids = 2 + rng() % 7;
        std::vector<LabeledImage> rows;
        for (std::size_t i = 0; i < ids; ++i) {
            const std::size_t n = 1 + rng() % 12;
            for (std::size_t j = 0; j < n; ++j) {
                rows.push_back({std::to_string(i) + "_" + std::to_string(j), IdentityId("id" + std::to_string(i))});
            }
        }
        std::shuffle(rows.begin(), rows.end(), rng);
        const DatasetManifest m(rows);
        const std::size_t k = 2 + rng() % std::min<std::size_t>(m.size() - 1, 11);
        const auto f = make_folds(m, k, rng());
        ASSERT_NO_THROW(check_folds(f, m));

        const auto sizes = f.fold_sizes();
        ASSERT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), m.size());
        std::set<std::size_t> all;
        for (std::size_t fold = 0; fold < k; ++fold) {
            for (auto i : f.members(fold)) ASSERT_TRUE(all.insert(i).second);
            const auto comp = f.complement(fold);
            ASSERT_EQ(comp.size() + f.members(fold).size(), m.size());
        }
        for (std::size_t c = 0; c < m.registry().size(); ++c) {
            std::vector<std::size_t> counts(k, 0);
            for (std::size_t i = 0; i < m.size(); ++i) {
                if (m.class_of(i) == c) ++counts[f.fold_of[i]];
            }
            const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
            ASSERT_LE(*hi - *lo, 1u) << "trial " << trial << " class " << c;
        }
    }
}

TEST(Folds, FileRoundTripAndMismatch) {
    TempDir dir;
    const auto m = grid_manifest(4, 3);
    const auto f = make_folds(m, 3, 9);
    write_folds(f, m, dir / "folds.json");
    EXPECT_EQ(read_folds(dir / "folds.json", m), f);

    const auto other = grid_manifest(4, 4);
    EXPECT_THROW(read_folds(dir / "folds.json", other), ManifestError);

    auto doc = folds_to_json(f, m);
    doc["entries"][0]["identity_id"] = "someone_else";
    std::ofstream(dir / "bad.json") << doc.dump();
    EXPECT_THROW(read_folds(dir / "bad.json", m), ManifestError);
    EXPECT_THROW(read_folds(dir / "nope.json", m), ManifestError);
}

TEST(Folds, CheckRejectsMalformed) {
    const auto m = grid_manifest(2, 3);
    auto f = make_folds(m, 3, 1);
    f.fold_of[0] = 7;
    EXPECT_THROW(check_folds(f, m), ManifestError);
    f.fold_of.pop_back();
    EXPECT_THROW(check_folds(f, m), ManifestError);
}

}  // namespace
}  // namespace petident
