#include "petident/inference.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "petident/errors.hpp"

namespace petident {

namespace fs = std::filesystem;

namespace {

double checked_sum(const std::vector<double>& v) {
    if (v.empty()) throw InferenceError("score vector is empty");
    double sum = 0.0;
    for (double s : v) {
        if (!std::isfinite(s) || s < 0.0) throw InferenceError("score vector has a negative or non-finite entry");
        sum += s;
    }
    return sum;
}

}  // namespace

ScoreVector::ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
    const double sum = checked_sum(scores_);
    if (std::abs(sum - 1.0) > kScoreSumTolerance) {
        std::ostringstream os;
        os << "scores sum to " << sum << ", not 1";
        throw InferenceError(os.str());
    }
}

std::size_t ScoreVector::argmax() const {
    if (scores_.empty()) throw InferenceError("argmax of empty score vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores_.size(); ++i) {
        if (scores_[i] > scores_[best]) best = i;
    }
    return best;
}

ScoreVector validate_scores(std::vector<double> raw, std::size_t expected_classes) {
    if (raw.size() != expected_classes) {
        throw InferenceError("classifier returned " + std::to_string(raw.size()) + " scores, expected " +
                             std::to_string(expected_classes));
    }
    const double sum = checked_sum(raw);
    const double err = std::abs(sum - 1.0);
    if (err <= kScoreSumTolerance) return ScoreVector(std::move(raw));
    if (err <= kScoreRenormalizeTolerance) {
        std::ostringstream os;
        os << "renormalizing classifier output (sum " << sum << ")";
        warn(os.str());
        for (auto& s : raw) s /= sum;
        return ScoreVector(std::move(raw));
    }
    std::ostringstream os;
    os << "classifier output is not normalized (sum " << sum << ")";
    throw InferenceError(os.str());
}

std::vector<double> ClassifierBackend::run(const Window& window) {
    if (concurrent()) return do_run(window);
    std::lock_guard lock(mutex_);
    return do_run(window);
}

ScoreVector classify(const Window& window, ClassifierBackend& backend) {
    const int side = backend.input_side();
    if (window.pixels.width != side || window.pixels.height != side) {
        throw InferenceError("window is " + std::to_string(window.pixels.width) + "x" +
                             std::to_string(window.pixels.height) + ", classifier expects side " +
                             std::to_string(side));
    }
    return validate_scores(backend.run(window), backend.num_classes());
}

std::vector<ScoreVector> classify_batch(std::span<const Window> windows, ClassifierBackend& backend) {
    std::vector<ScoreVector> out;
    out.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        try {
            out.push_back(classify(windows[i], backend));
        } catch (const InferenceError& e) {
            throw InferenceError("window " + std::to_string(i) + ": " + e.what(), i);
        }
    }
    return out;
}

MockClassifier::MockClassifier(int input_side, std::vector<IdentityId> identities)
    : input_side_(input_side), identities_(std::move(identities)) {
    if (input_side_ < 1) throw BackendError("mock classifier: input side must be positive");
    if (identities_.empty()) throw BackendError("mock classifier: no identities");
}

void MockClassifier::script(const std::string& source, int ordinal, std::vector<double> scores) {
    by_key_[{source, ordinal}] = std::move(scores);
}

void MockClassifier::script_fingerprint(std::uint64_t fp, std::vector<double> scores) {
    by_fingerprint_[fp] = std::move(scores);
}

std::vector<double> MockClassifier::do_run(const Window& window) {
    if (auto it = by_key_.find({window.source, window.ordinal}); it != by_key_.end()) return it->second;
    if (!by_fingerprint_.empty()) {
        if (auto it = by_fingerprint_.find(fingerprint(window.pixels)); it != by_fingerprint_.end()) {
            return it->second;
        }
    }
    if (fallback_) return *fallback_;
    throw BackendError("mock classifier: no scripted scores for " + window.source + " window " +
                       std::to_string(window.ordinal));
}

namespace {

std::vector<double> parse_scores(const std::string& field, const std::string& where) {
    std::vector<double> out;
    std::istringstream is(field);
    is.imbue(std::locale::classic());
    std::string tok;
    while (std::getline(is, tok, ';')) {
        std::istringstream ts(csv::trim(tok));
        ts.imbue(std::locale::classic());
        double v = 0.0;
        if (!(ts >> v) || !ts.eof()) throw BackendError(where + ": bad score '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw BackendError(where + ": empty score list");
    return out;
}

}  // namespace

MockClassifier MockClassifier::load(const fs::path& table_path, int input_side,
                                    std::vector<IdentityId> identities) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::read_file(table_path);
    } catch (const std::exception& e) {
        throw BackendError(std::string("mock classifier: ") + e.what());
    }
    const std::vector<std::string> expected{"image_path", "window_ordinal", "scores"};
    if (rows.empty() || rows.front().fields != expected) {
        throw BackendError("mock classifier: " + table_path.string() +
                           ": expected header image_path,window_ordinal,scores");
    }
    MockClassifier mock(input_side, std::move(identities));
    const auto base = table_path.parent_path();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        const std::string where = table_path.string() + ":" + std::to_string(rows[r].line);
        if (f.size() != 3) throw BackendError(where + ": wrong field count");
        int ordinal = 0;
        try {
            std::size_t used = 0;
            ordinal = std::stoi(f[1], &used);
            if (used != f[1].size() || ordinal < 0 || ordinal >= static_cast<int>(kWindowCount)) throw 0;
        } catch (...) {
            throw BackendError(where + ": bad window ordinal '" + f[1] + "'");
        }
        const fs::path p(f[0]);
        mock.script(source_key(p.is_absolute() ? p : base / p), ordinal, parse_scores(f[2], where));
    }
    return mock;
}

void write_score_table(const std::map<std::pair<std::string, int>, std::vector<double>>& table,
                       const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.imbue(std::locale::classic());
    out << "image_path,window_ordinal,scores\n" << std::setprecision(17);
    for (const auto& [key, scores] : table) {
        out << csv::escape(key.first) << ',' << key.second << ',';
        for (std::size_t i = 0; i < scores.size(); ++i) out << (i ? ";" : "") << scores[i];
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<IdentityId> load_identities(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw BackendError("cannot open identities file " + path.string());
    std::vector<IdentityId> ids;
    std::string line;
    while (std::getline(in, line)) {
        auto t = csv::trim(line);
        if (!t.empty()) ids.emplace_back(std::move(t));
    }
    if (ids.empty()) throw BackendError("identities file " + path.string() + " is empty");
    return ids;
}

void write_identities(const std::vector<IdentityId>& ids, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& id : ids) out << id.str() << '\n';
}

}  // namespace petident
