#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "petident/dataset.hpp"
#include "petident/windowing.hpp"

namespace petident {

/// Sums within this distance of 1 are accepted as-is.
inline constexpr double kScoreSumTolerance = 1e-5;
/// Sums within this distance of 1 are renormalized with a warning; beyond it they are rejected.
inline constexpr double kScoreRenormalizeTolerance = 0.01;

/// Softmax output for one window: non-negative, sums to 1 within 1e-5.
class ScoreVector {
public:
    ScoreVector() = default;
    /// Throws InferenceError if the values break the invariants.
    explicit ScoreVector(std::vector<double> scores);

    std::size_t size() const noexcept { return scores_.size(); }
    double operator[](std::size_t i) const { return scores_[i]; }
    const std::vector<double>& values() const noexcept { return scores_; }

    /// Lowest index among the maxima.
    std::size_t argmax() const;
    double max() const { return scores_.at(argmax()); }

    bool operator==(const ScoreVector&) const = default;

private:
    std::vector<double> scores_;
};

/// Checks raw backend output of expected length K. Sums off by more than
/// kScoreSumTolerance but within kScoreRenormalizeTolerance are rescaled (with
/// a warning); anything else throws InferenceError.
ScoreVector validate_scores(std::vector<double> raw, std::size_t expected_classes);

class ClassifierBackend {
public:
    ClassifierBackend() = default;
    // Copies and moves get a fresh, unlocked mutex.
    ClassifierBackend(const ClassifierBackend&) {}
    ClassifierBackend& operator=(const ClassifierBackend&) { return *this; }
    virtual ~ClassifierBackend() = default;

    /// Raw scores for one window; serialized when concurrent() is false.
    std::vector<double> run(const Window& window);

    virtual int input_side() const = 0;
    virtual std::size_t num_classes() const = 0;
    /// Class-index order of identities, if the backend knows it; empty otherwise.
    virtual std::vector<IdentityId> identities() const { return {}; }
    virtual bool concurrent() const { return true; }
    virtual std::string name() const = 0;

protected:
    virtual std::vector<double> do_run(const Window& window) = 0;

private:
    std::mutex mutex_;
};

ScoreVector classify(const Window& window, ClassifierBackend& backend);

/// Same as mapping classify(); errors carry the failing window index.
std::vector<ScoreVector> classify_batch(std::span<const Window> windows, ClassifierBackend& backend);

/// Fixture-driven backend. Lookup order: (source, ordinal) table, pixel
/// fingerprint table, then the fallback vector. A miss with no fallback throws BackendError.
class MockClassifier final : public ClassifierBackend {
public:
    MockClassifier(int input_side, std::vector<IdentityId> identities);

    /// CSV with header image_path,window_ordinal,scores where scores is a
    /// ';'-separated list. Relative paths resolve against the table's directory.
    static MockClassifier load(const std::filesystem::path& table_path, int input_side,
                               std::vector<IdentityId> identities);

    void script(const std::string& source, int ordinal, std::vector<double> scores);
    void script_fingerprint(std::uint64_t fingerprint, std::vector<double> scores);
    void set_fallback(std::vector<double> scores) { fallback_ = std::move(scores); }

    int input_side() const override { return input_side_; }
    std::size_t num_classes() const override { return identities_.size(); }
    std::vector<IdentityId> identities() const override { return identities_; }
    std::string name() const override { return "mock"; }

    const std::map<std::pair<std::string, int>, std::vector<double>>& table() const noexcept {
        return by_key_;
    }

protected:
    std::vector<double> do_run(const Window& window) override;

private:
    int input_side_;
    std::vector<IdentityId> identities_;
    std::map<std::pair<std::string, int>, std::vector<double>> by_key_;
    std::map<std::uint64_t, std::vector<double>> by_fingerprint_;
    std::optional<std::vector<double>> fallback_;
};

void write_score_table(const std::map<std::pair<std::string, int>, std::vector<double>>& table,
                       const std::filesystem::path& path);

/// One identity per non-empty line.
std::vector<IdentityId> load_identities(const std::filesystem::path& path);
void write_identities(const std::vector<IdentityId>& ids, const std::filesystem::path& path);

}  // namespace petident
