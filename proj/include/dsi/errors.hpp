#pragma once

#include <stdexcept>
#include <string>

namespace dsi {

// Raised for malformed or inconsistent experiment configuration. The CLI
// maps this to exit code 1; every other exception maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the trace replayer: malformed file, mismatched query, or a
// query past the end of the recorded sequence.
class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dsi
