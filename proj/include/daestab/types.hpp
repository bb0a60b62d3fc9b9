#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>

namespace daestab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A state on the combined space: x are dynamic states, y algebraic states.
struct Point {
    Vec x;
    Vec y;
};

// ---------------------------------------------------------------------------
// Error taxonomy. Contract violations and numerical failures are exceptions;
// expected outcomes (trajectory terminations, stability verdicts) are values.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};
struct SingularPointError : Error {
    using Error::Error;
};
struct NewtonFailureError : Error {
    using Error::Error;
};
struct SingularJacobianError : Error {
    using Error::Error;
};
struct EigenvalueOnAxisError : Error {
    using Error::Error;
};
struct WrongElementKindError : Error {
    using Error::Error;
};
struct AmbiguousSpectrumError : Error {
    using Error::Error;
};
struct NoCrossingError : Error {
    using Error::Error;
};
struct BracketError : Error {
    using Error::Error;
};
struct InconclusiveError : Error {
    using Error::Error;
};
struct DegenerateDenominatorError : Error {
    using Error::Error;
};
struct IllConditionedError : Error {
    using Error::Error;
};
struct UnclassifiableError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

/// Named scalar parameters plus the designation of the single parameter that
/// sensitivity studies differentiate against.
class ParamSet {
  public:
    ParamSet() = default;
    ParamSet(std::map<std::string, double> values, std::string active)
        : values_(std::move(values)), active_(std::move(active)) {}

    double value(const std::string& name) const {
        auto it = values_.find(name);
        if (it == values_.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return values_.count(name) != 0; }

    const std::string& active_name() const { return active_; }
    double active_value() const { return value(active_); }

    void set(const std::string& name, double v) { values_[name] = v; }
    void set_active(const std::string& name) {
        if (!has(name)) throw ConfigError("cannot activate unknown parameter: " + name);
        active_ = name;
    }

    ParamSet with(const std::string& name, double v) const {
        ParamSet out = *this;
        out.values_[name] = v;
        return out;
    }
    ParamSet with_active(double v) const { return with(active_, v); }
    ParamSet with_active_shifted(double dv) const { return with(active_, active_value() + dv); }

    const std::map<std::string, double>& values() const { return values_; }

  private:
    std::map<std::string, double> values_;
    std::string active_;
};

}  // namespace daestab
