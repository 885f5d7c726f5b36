#pragma once

#include <stdexcept>
#include <string>

namespace hspoly {

/// Invalid argument passed to a library operation (bad index, bad dimension,
/// out-of-range hyperparameter).
class argument_error : public std::invalid_argument {
public:
    explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A requested problem size does not fit the platform index type or memory model.
class capacity_error : public argument_error {
public:
    explicit capacity_error(const std::string& what) : argument_error(what) {}
};

/// Malformed input data (CSV parse failures, missing columns, ragged rows).
class data_error : public std::runtime_error {
public:
    data_error(const std::string& what, long row = -1, long column = -1)
        : std::runtime_error(format(what, row, column)), row_(row), column_(column) {}

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, long row, long column) {
        std::string msg = what;
        if (row >= 0) msg += " (row " + std::to_string(row);
        if (row >= 0 && column >= 0) msg += ", column " + std::to_string(column);
        if (row >= 0) msg += ")";
        return msg;
    }

    long row_;
    long column_;
};

/// A numerical factorization or solve failed beyond recovery attempts.
/// Carries basic conditioning diagnostics of the offending system.
class numerical_error : public std::runtime_error {
public:
    numerical_error(const std::string& what, double trace = 0.0, double jitter = 0.0)
        : std::runtime_error(what + " [trace=" + std::to_string(trace) +
                             ", last_jitter=" + std::to_string(jitter) + "]"),
          trace_(trace), jitter_(jitter) {}

    double trace() const noexcept { return trace_; }
    double last_jitter() const noexcept { return jitter_; }

private:
    double trace_;
    double jitter_;
};

}  // namespace hspoly
