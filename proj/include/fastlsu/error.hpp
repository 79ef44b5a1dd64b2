#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace fastlsu {

// Base for every error raised by the library. The CLI maps each subclass
// onto a distinct exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: out-of-range or non-finite p-value, malformed file, inconsistent
// manifest. Carries the offending position (0-based) or line (1-based) when known.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what,
                             std::optional<std::uint64_t> position = std::nullopt)
        : Error(what), position_(position) {}

    std::optional<std::uint64_t> position() const noexcept { return position_; }

private:
    std::optional<std::uint64_t> position_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A broken internal invariant (budget overrun, non-monotone pass counts).
// Never expected on valid input.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace fastlsu
