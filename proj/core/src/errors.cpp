#include "petident/errors.hpp"

#include <iostream>
#include <mutex>

namespace petident {

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler_slot() {
    static WarningHandler h = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
    return h;
}

}  // namespace

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::detect: return "detect";
    case Stage::windows: return "windows";
    case Stage::classify: return "classify";
    case Stage::vote: return "vote";
    }
    return "unknown";
}

PipelineError::PipelineError(Stage stage, const std::string& what)
    : Error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    auto previous = std::move(handler_slot());
    handler_slot() = std::move(handler);
    return previous;
}

void warn(std::string_view message) {
    std::lock_guard lock(handler_mutex());
    if (handler_slot()) handler_slot()(message);
}

}  // namespace petident
