#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hover_es {

/// Process exit codes used by the CLI. Stable across versions.
enum class ExitCode : int {
    Success = 0,
    AcceptanceFailure = 1,
    ConfigError = 2,
    Divergence = 3,
    AnalysisFailure = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::ConfigError; }
};

// Bad user input: schema violations, invariant violations, unknown names.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Argument outside the domain of a function (e.g. r outside [0, R]).
class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidMorphology : public Error {
public:
    using Error::Error;
};

// Quadrature that cannot converge (non-integrable endpoint singularity).
class IntegrationError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::AnalysisFailure; }
};

class InsufficientData : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::AnalysisFailure; }
};

// Integration produced a non-finite state. Carries the last finite state.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time, std::vector<double> last_state)
        : Error(what), time_(time), last_state_(std::move(last_state)) {}
    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] const std::vector<double>& last_state() const noexcept { return last_state_; }
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::Divergence; }

private:
    double time_;
    std::vector<double> last_state_;
};

class NoEquilibriumFound : public Error {
public:
    NoEquilibriumFound(const std::string& what, double best_residual)
        : Error(what), best_residual_(best_residual) {}
    [[nodiscard]] double best_residual() const noexcept { return best_residual_; }
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::AnalysisFailure; }

private:
    double best_residual_;
};

}  // namespace hover_es
