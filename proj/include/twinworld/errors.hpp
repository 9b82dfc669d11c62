#pragma once

#include <stdexcept>
#include <string>

namespace twinworld {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// State carries no usable signal: zero norm, zero amplitude, or zero coincidences.
class DegenerateState : public Error {
public:
    using Error::Error;
};

class InvalidGate : public Error {
public:
    using Error::Error;
};

class InvalidPotential : public Error {
public:
    using Error::Error;
};

class InvalidDistribution : public Error {
public:
    using Error::Error;
};

class InvalidProgram : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : Error(field + ": " + message), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Time step outside the region where 1 + dt*G stays non-negative.
class StepTooLarge : public Error {
public:
    StepTooLarge(double dt, double max_dt)
        : Error("time step " + std::to_string(dt) + " exceeds admissible maximum " + std::to_string(max_dt)),
          dt_(dt), max_dt_(max_dt) {}
    double dt() const { return dt_; }
    double max_dt() const { return max_dt_; }

private:
    double dt_;
    double max_dt_;
};

}  // namespace twinworld
