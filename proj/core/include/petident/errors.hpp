#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace petident {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad manifest or folds file. row() is the 1-based data row (header excluded), 0 when not row-specific.
class ManifestError : public Error {
public:
    explicit ManifestError(const std::string& what, std::size_t row = 0)
        : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Model missing, corrupt, or misbehaving.
class BackendError : public Error {
public:
    using Error::Error;
};

/// A classifier output or window that violates the scoring contract.
class InferenceError : public Error {
public:
    explicit InferenceError(const std::string& what,
                            std::optional<std::size_t> window_index = std::nullopt)
        : Error(what), window_index_(window_index) {}
    std::optional<std::size_t> window_index() const noexcept { return window_index_; }

private:
    std::optional<std::size_t> window_index_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Stage { detect, windows, classify, vote };

std::string_view to_string(Stage stage);

/// Error raised inside identify(), tagged with the pipeline stage that failed.
class PipelineError : public Error {
public:
    PipelineError(Stage stage, const std::string& what);
    Stage stage() const noexcept { return stage_; }

private:
    Stage stage_;
};

using WarningHandler = std::function<void(std::string_view)>;

// Default handler writes to std::clog. Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace petident
