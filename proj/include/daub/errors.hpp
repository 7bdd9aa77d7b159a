// errors.hpp
#pragma once
#include <stdexcept>
#include <string>

namespace daub {

// Invalid run parameters (r, b, N, delta, schedule override, config files).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A function evaluated outside the range where it is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Cost lookup failed for an allocation pair.
class IncompleteCostError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A learner could not produce a sample (crash, timeout, trainer-side error).
// The scheduler deactivates the learner and keeps going.
class LearnerFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unexpected message from a trainer worker.
class ProtocolError : public LearnerFailure {
public:
    using LearnerFailure::LearnerFailure;
};

// Replay query outside the recorded table.
class OutOfRangeError : public LearnerFailure {
public:
    using LearnerFailure::LearnerFailure;
};

// The run cannot complete (every learner failed, empty pool).
class RunError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace daub
