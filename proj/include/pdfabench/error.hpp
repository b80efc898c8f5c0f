#pragma once

#include <stdexcept>
#include <string>

namespace pdfabench {

// Base of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ImpossibleObservation : public Error {
public:
    ImpossibleObservation(std::string const& machine_id, std::size_t step)
        : Error("observation at step " + std::to_string(step) +
                " has zero probability under machine '" + machine_id + "'"),
          step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class ParseError : public Error {
public:
    ParseError(std::string const& source, std::size_t line, std::string const& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedSize : public Error {
public:
    using Error::Error;
};

class DegenerateTopology : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class TrainingFailure : public Error {
public:
    using Error::Error;
};

class ExcludedMachine : public Error {
public:
    using Error::Error;
};

class DegenerateRegression : public Error {
public:
    using Error::Error;
};

}  // namespace pdfabench
