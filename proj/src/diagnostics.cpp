#include "tvec/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <string>

namespace tvec {

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler() {
    static WarningHandler h;
    return h;
}

}  // namespace

void warn(std::string_view message) {
    WarningHandler h;
    {
        std::lock_guard lock(handler_mutex());
        h = handler();
    }
    if (h)
        h(message);
    else
        std::cerr << "warning: " << message << '\n';
}

WarningHandler set_warning_handler(WarningHandler next) {
    std::lock_guard lock(handler_mutex());
    WarningHandler prev = std::move(handler());
    handler() = std::move(next);
    return prev;
}

WarningCapture::WarningCapture() {
    previous_ = set_warning_handler([this](std::string_view) { ++count_; });
}

WarningCapture::~WarningCapture() { set_warning_handler(std::move(previous_)); }

}  // namespace tvec
