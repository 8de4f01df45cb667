#include "petident/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "petident/errors.hpp"
#include "petident/random.hpp"

namespace petident {

namespace fs = std::filesystem;
using nlohmann::json;

IdentityId::IdentityId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw std::invalid_argument("identity id must not be empty");
}

IdentityRegistry::IdentityRegistry(const std::vector<IdentityId>& ordered) {
    for (const auto& id : ordered) {
        if (index_of(id)) throw std::invalid_argument("duplicate identity " + id.str());
        add(id);
    }
}

std::size_t IdentityRegistry::add(const IdentityId& id) {
    auto [it, inserted] = index_.try_emplace(id.str(), ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
}

std::optional<std::size_t> IdentityRegistry::index_of(const IdentityId& id) const {
    auto it = index_.find(id.str());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

DatasetManifest::DatasetManifest(std::vector<LabeledImage> entries, fs::path base_dir)
    : entries_(std::move(entries)), base_dir_(std::move(base_dir)) {
    if (entries_.empty()) throw ManifestError("empty manifest");
    std::set<std::pair<std::string, std::string>> seen;
    classes_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!seen.emplace(e.image_path.generic_string(), e.identity.str()).second) {
            throw ManifestError("duplicate row " + std::to_string(i + 1) + ": " +
                                    e.image_path.generic_string() + "," + e.identity.str(),
                                i + 1);
        }
        classes_.push_back(registry_.add(e.identity));
    }
}

fs::path DatasetManifest::resolve(std::size_t i) const {
    const auto& p = entries_.at(i).image_path;
    if (p.is_absolute() || base_dir_.empty()) return p;
    return base_dir_ / p;
}

std::vector<std::vector<std::size_t>> DatasetManifest::entries_by_class() const {
    std::vector<std::vector<std::size_t>> groups(registry_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) groups[classes_[i]].push_back(i);
    return groups;
}

DatasetManifest load_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw ManifestError("manifest not found: " + path.string());
    std::vector<csv::Row> rows;
    try {
        rows = csv::read_file(path);
    } catch (const std::invalid_argument& e) {
        throw ManifestError(path.string() + ": " + e.what());
    }
    if (rows.empty()) throw ManifestError("empty manifest");

    const auto& header = rows.front().fields;
    const bool header_ok = (header.size() == 2 || header.size() == 3) &&
                           header[0] == "image_path" && header[1] == "identity_id" &&
                           (header.size() == 2 || header[2] == "split");
    if (!header_ok) {
        throw ManifestError(path.string() + ": line " + std::to_string(rows.front().line) +
                            ": expected header image_path,identity_id[,split]");
    }
    if (rows.size() == 1) throw ManifestError("empty manifest");

    std::vector<LabeledImage> entries;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(row.line) + ")";
        if (row.fields.size() != header.size() || row.fields[0].empty() || row.fields[1].empty()) {
            throw ManifestError(path.string() + ": malformed " + where, r);
        }
        if (!seen.emplace(row.fields[0], row.fields[1]).second) {
            throw ManifestError(path.string() + ": duplicate " + where + ": " + row.fields[0] + "," +
                                    row.fields[1],
                                r);
        }
        entries.push_back({fs::path(row.fields[0]), IdentityId(row.fields[1])});
    }
    return DatasetManifest(std::move(entries), path.parent_path());
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "image_path,identity_id\n";
    for (const auto& e : manifest.entries()) {
        out << csv::escape(e.image_path.generic_string()) << ',' << csv::escape(e.identity.str()) << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

ValidationReport validate_manifest(const DatasetManifest& manifest, std::size_t min_images) {
    if (min_images == 0) throw std::invalid_argument("min_images must be positive");
    ValidationReport report;
    report.min_images = min_images;
    const auto groups = manifest.entries_by_class();
    for (std::size_t c = 0; c < groups.size(); ++c) {
        if (groups[c].size() < min_images) {
            report.deficiencies.emplace_back(manifest.registry().at(c), groups[c].size());
        }
    }
    return report;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : fold_of) ++sizes.at(f);
    return sizes;
}

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) out.push_back(i);
    }
    return out;
}

FoldAssignment make_folds(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("k must be at least 2");
    if (k > manifest.size()) {
        throw std::invalid_argument("k=" + std::to_string(k) + " exceeds entry count " +
                                    std::to_string(manifest.size()));
    }
    FoldAssignment folds{k, seed, std::vector<std::size_t>(manifest.size(), 0)};
    auto groups = manifest.entries_by_class();
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto id_hash = fnv1a64(manifest.registry().at(c).str());
        DeterministicRng rng(mix_seed(seed, id_hash));
        auto& members = groups[c];
        rng.shuffle(std::span<std::size_t>(members));
        const std::size_t start = id_hash % k;
        for (std::size_t j = 0; j < members.size(); ++j) {
            folds.fold_of[members[j]] = (start + j) % k;
        }
    }
    return folds;
}

void check_folds(const FoldAssignment& folds, const DatasetManifest& manifest) {
    if (folds.k < 2) throw ManifestError("folds: k must be at least 2");
    if (folds.fold_of.size() != manifest.size()) {
        throw ManifestError("folds cover " + std::to_string(folds.fold_of.size()) +
                            " entries but manifest has " + std::to_string(manifest.size()));
    }
    for (std::size_t i = 0; i < folds.fold_of.size(); ++i) {
        if (folds.fold_of[i] >= folds.k) {
            throw ManifestError("folds: entry " + std::to_string(i + 1) + " has fold index out of range",
                                i + 1);
        }
    }
}

json folds_to_json(const FoldAssignment& folds, const DatasetManifest& manifest) {
    check_folds(folds, manifest);
    json doc;
    doc["schema"] = "petident-folds/1";
    doc["k"] = folds.k;
    doc["seed"] = folds.seed;
    doc["fold_sizes"] = folds.fold_sizes();
    json entries = json::array();
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& e = manifest.entries()[i];
        entries.push_back({{"image_path", e.image_path.generic_string()},
                           {"identity_id", e.identity.str()},
                           {"fold", folds.fold_of[i]}});
    }
    doc["entries"] = std::move(entries);
    return doc;
}

void write_folds(const FoldAssignment& folds, const DatasetManifest& manifest, const fs::path& path) {
    const auto doc = folds_to_json(folds, manifest);
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path.string());
}

FoldAssignment read_folds(const fs::path& path, const DatasetManifest& manifest) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open folds file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ManifestError("folds file " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("schema").get<std::string>() != "petident-folds/1") {
            throw ManifestError("folds file " + path.string() + ": unsupported schema");
        }
        FoldAssignment folds;
        folds.k = doc.at("k").get<std::size_t>();
        folds.seed = doc.at("seed").get<std::uint64_t>();
        const auto& entries = doc.at("entries");
        if (entries.size() != manifest.size()) {
            throw ManifestError("folds file lists " + std::to_string(entries.size()) +
                                " entries but manifest has " + std::to_string(manifest.size()));
        }
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& row = entries[i];
            const auto& e = manifest.entries()[i];
            if (row.at("image_path").get<std::string>() != e.image_path.generic_string() ||
                row.at("identity_id").get<std::string>() != e.identity.str()) {
                throw ManifestError("folds entry " + std::to_string(i + 1) + " does not match manifest row",
                                    i + 1);
            }
            folds.fold_of.push_back(row.at("fold").get<std::size_t>());
        }
        check_folds(folds, manifest);
        return folds;
    } catch (const json::exception& e) {
        throw ManifestError("folds file " + path.string() + ": " + e.what());
    }
}

}  // namespace petident
