#ifndef VITERBINET_ERROR_HPP
#define VITERBINET_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace viterbinet {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Constellation, noise family and detector choices that cannot be combined.
class InvalidScenario : public Error {
public:
    using Error::Error;
};

/// Every trellis state at some step has an infinite cost.
class NoValidPath : public Error {
public:
    using Error::Error;
};

class InstanceTooLarge : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& what)
        : Error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class FitFailure : public Error {
public:
    using Error::Error;
};

class TabulationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::size_t line, const std::string& what)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace viterbinet

#endif
