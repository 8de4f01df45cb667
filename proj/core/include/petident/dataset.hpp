#pragma once

// Labeled image manifests, the identity registry and stratified k-fold splits.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace petident {

/// Platform dog ID. Never empty.
class IdentityId {
public:
    explicit IdentityId(std::string value);

    const std::string& str() const noexcept { return value_; }

    auto operator<=>(const IdentityId&) const = default;

private:
    std::string value_;
};

struct LabeledImage {
    std::filesystem::path image_path;  // as written in the manifest
    IdentityId identity;

    bool operator==(const LabeledImage&) const = default;
};

/// Bijection IdentityId <-> class index 0..K-1 in first-seen order.
class IdentityRegistry {
public:
    IdentityRegistry() = default;
    explicit IdentityRegistry(const std::vector<IdentityId>& ordered);

    /// Returns the existing index or appends a new one.
    std::size_t add(const IdentityId& id);

    std::optional<std::size_t> index_of(const IdentityId& id) const;
    const IdentityId& at(std::size_t index) const { return ids_.at(index); }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<IdentityId>& ids() const noexcept { return ids_; }

    bool operator==(const IdentityRegistry& other) const { return ids_ == other.ids_; }

private:
    std::vector<IdentityId> ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

class DatasetManifest {
public:
    DatasetManifest() = default;

    /// Builds the registry from the entries. Throws ManifestError on an empty
    /// list or a duplicated (image_path, identity) pair.
    DatasetManifest(std::vector<LabeledImage> entries, std::filesystem::path base_dir = {});

    const std::vector<LabeledImage>& entries() const noexcept { return entries_; }
    const IdentityRegistry& registry() const noexcept { return registry_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Class index of entry i.
    std::size_t class_of(std::size_t i) const { return classes_.at(i); }

    /// Directory relative image paths are resolved against (the manifest file's directory).
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
    std::filesystem::path resolve(std::size_t i) const;

    /// Entry indices per class, each list in manifest order.
    std::vector<std::vector<std::size_t>> entries_by_class() const;

private:
    std::vector<LabeledImage> entries_;
    std::vector<std::size_t> classes_;
    IdentityRegistry registry_;
    std::filesystem::path base_dir_;
};

/// Reads `image_path,identity_id[,split]` CSV with a mandatory header.
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct ValidationReport {
    std::size_t min_images = 5;
    // Identities below the threshold, registry order, with their image counts.
    std::vector<std::pair<IdentityId, std::size_t>> deficiencies;

    bool valid() const noexcept { return deficiencies.empty(); }
};

inline constexpr std::size_t kDefaultMinImages = 5;

ValidationReport validate_manifest(const DatasetManifest& manifest,
                                   std::size_t min_images = kDefaultMinImages);

struct FoldAssignment {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> fold_of;  // entry index -> fold

    std::vector<std::size_t> fold_sizes() const;
    std::vector<std::size_t> members(std::size_t fold) const;
    std::vector<std::size_t> complement(std::size_t fold) const;

    bool operator==(const FoldAssignment&) const = default;
};

/// Stratified assignment. Each identity's entries are shuffled with a generator
/// seeded from (seed, FNV-1a(identity)) and dealt round-robin starting at fold
/// FNV-1a(identity) mod k. Throws std::invalid_argument for k < 2 or k > size.
FoldAssignment make_folds(const DatasetManifest& manifest, std::size_t k, std::uint64_t seed);

/// JSON folds document ("petident-folds/1") listing every entry with its fold.
nlohmann::json folds_to_json(const FoldAssignment& folds, const DatasetManifest& manifest);

void write_folds(const FoldAssignment& folds, const DatasetManifest& manifest,
                 const std::filesystem::path& path);

/// Reads a folds document and checks it row-by-row against `manifest`.
/// Throws ManifestError on any mismatch.
FoldAssignment read_folds(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Throws ManifestError unless `folds` is a well-formed partition of `manifest`.
void check_folds(const FoldAssignment& folds, const DatasetManifest& manifest);

}  // namespace petident
