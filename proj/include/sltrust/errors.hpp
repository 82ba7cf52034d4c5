#ifndef SLTRUST_ERRORS_HPP
#define SLTRUST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sltrust {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An opinion violates the additivity or range constraints.
class InvalidOpinion : public Error {
public:
    explicit InvalidOpinion(const std::string& what) : Error("InvalidOpinion: " + what) {}
};

/// Evidence mapping requested for an opinion with zero uncertainty.
class DogmaticOpinion : public Error {
public:
    explicit DogmaticOpinion(const std::string& what) : Error("DogmaticOpinion: " + what) {}
};

/// Two values that must share a domain do not.
class DomainMismatch : public Error {
public:
    explicit DomainMismatch(const std::string& what) : Error("DomainMismatch: " + what) {}
};

/// Fusion operands live on different domains.
class FusionDomainMismatch : public Error {
public:
    explicit FusionDomainMismatch(const std::string& what)
        : Error("FusionDomainMismatch: " + what) {}
};

/// Fusion operand has zero uncertainty.
class DogmaticOperand : public Error {
public:
    explicit DogmaticOperand(const std::string& what) : Error("DogmaticOperand: " + what) {}
};

/// Cumulative fusion operand has full uncertainty.
class VacuousOperand : public Error {
public:
    explicit VacuousOperand(const std::string& what) : Error("VacuousOperand: " + what) {}
};

/// Density evaluation point is not a strictly positive probability vector.
class InvalidProbabilityVector : public Error {
public:
    explicit InvalidProbabilityVector(const std::string& what)
        : Error("InvalidProbabilityVector: " + what) {}
};

/// Fewer than two reports were supplied to the detection pipeline.
class InsufficientReports : public Error {
public:
    explicit InsufficientReports(const std::string& what)
        : Error("InsufficientReports: " + what) {}
};

/// A scenario or simulation configuration is unusable.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("ConfigError: " + what) {}
};

}  // namespace sltrust

#endif  // SLTRUST_ERRORS_HPP
