#pragma once

#include <stdexcept>
#include <string>

namespace gdon {

/// Bad shapes, out-of-range parameters, inconsistent inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dataset or checkpoint file is missing a required array or attribute.
class SchemaViolation : public std::runtime_error {
public:
    SchemaViolation(const std::string& field, const std::string& what)
        : std::runtime_error("schema violation [" + field + "]: " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The PDE solver blew up (|u| too large or NaN).
class IntegrationFailure : public std::runtime_error {
public:
    IntegrationFailure(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Non-finite values inside the network or the loss.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric is not defined for the given data (e.g. zero-norm reference).
class UndefinedMetric : public std::runtime_error {
public:
    UndefinedMetric(std::size_t frame, const std::string& what)
        : std::runtime_error(what), frame_(frame) {}
    std::size_t frame() const noexcept { return frame_; }

private:
    std::size_t frame_;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}
}  // namespace detail

}  // namespace gdon
