#pragma once

#include <functional>
#include <string_view>

namespace tvec {

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal conditions (degenerate SVD, undefined metric, dropped records)
// go through here. The default handler writes "warning: ..." to stderr.
void warn(std::string_view message);

// Returns the previous handler. Pass an empty function to restore the default.
WarningHandler set_warning_handler(WarningHandler handler);

// Scoped capture used by tests and by the CLI's --quiet mode.
class WarningCapture {
public:
    WarningCapture();
    ~WarningCapture();
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    int count() const { return count_; }

private:
    WarningHandler previous_;
    int count_ = 0;
};

}  // namespace tvec
