#pragma once

#include <stdexcept>
#include <string>

namespace bellnoise {

// Raised when a computed quantity lands far enough outside its admissible
// range that the inputs must be corrupt (e.g. a probability of 1.3).
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the text-format parsers. line() is 1-based; 0 means the error
// is not tied to a specific line (e.g. a missing section).
class parse_error : public std::runtime_error {
public:
    parse_error(std::string message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : std::move(message)),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace bellnoise
