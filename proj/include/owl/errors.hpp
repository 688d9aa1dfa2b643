#pragma once

#include <stdexcept>
#include <string>

namespace owl {

/// The eye (or slicer histogram) has no separable high/low clusters.
/// Carries the best Q estimate that could still be formed.
class DegradedSignal : public std::runtime_error {
public:
    DegradedSignal(const std::string& what, double measured_q)
        : std::runtime_error(what), measured_q_(measured_q) {}

    double measured_q() const noexcept { return measured_q_; }

private:
    double measured_q_;
};

/// Correlation peak too weak to trust; still carries the argmax.
class LowConfidence : public std::runtime_error {
public:
    LowConfidence(const std::string& what, double tau_d_s, double peak)
        : std::runtime_error(what), tau_d_s_(tau_d_s), peak_(peak) {}

    double tau_d_s() const noexcept { return tau_d_s_; }
    double correlation_peak() const noexcept { return peak_; }

private:
    double tau_d_s_;
    double peak_;
};

class NotFound : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Configuration text failed to parse or validate. `line` is 0 when the
/// problem is a missing key rather than a bad line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string key, int line = 0)
        : std::runtime_error(what), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    std::string key_;
    int line_;
};

}  // namespace owl
