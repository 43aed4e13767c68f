// errors.hpp
// Exception taxonomy shared by all factorcast components.

#pragma once

#include <stdexcept>
#include <string>

namespace factorcast {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// I/O and parsing
class IoError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class EmptyDataError : public Error { public: using Error::Error; };

// Panel construction
class AlignmentError : public Error { public: using Error::Error; };
class DegenerateSeriesError : public Error { public: using Error::Error; };
class InsufficientDataError : public Error { public: using Error::Error; };
class SplitError : public Error { public: using Error::Error; };

// Numerics and statistics
class DomainError : public Error { public: using Error::Error; };
class DegenerateRegressionError : public Error { public: using Error::Error; };
class SingularMatrixError : public Error { public: using Error::Error; };
class UndefinedStatError : public Error { public: using Error::Error; };
class InsufficientCandidatesError : public Error { public: using Error::Error; };

// Model
class ShapeError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };

class TrainingError : public Error {
public:
    TrainingError(const std::string& what, int epoch)
        : Error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }
private:
    int epoch_;
};

// Configuration / orchestration
class ConfigError : public Error { public: using Error::Error; };

// Wraps a failure with the pipeline stage it occurred in.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }
private:
    std::string stage_;
};

} // namespace factorcast
