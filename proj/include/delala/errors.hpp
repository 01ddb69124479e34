#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace delala {

/// Base class of every error raised by the toolkit.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter or infeasible configuration (exit status 2).
class config_error : public error {
public:
    using error::error;
};

/// Requested label budget cannot satisfy the per-class minimum.
class infeasible_budget_error : public config_error {
public:
    using config_error::config_error;
};

/// Unreadable or malformed input data (exit status 3).
class data_error : public error {
public:
    using error::error;
};

class parse_error : public data_error {
public:
    parse_error(std::size_t line, const std::string& what)
        : data_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class empty_input_error : public data_error {
public:
    using data_error::data_error;
};

/// A class has fewer members than its labeling quota.
class deficient_class_error : public data_error {
public:
    deficient_class_error(int class_id, const std::string& what) : data_error(what), class_id_(class_id) {}

    [[nodiscard]] int class_id() const noexcept { return class_id_; }

private:
    int class_id_;
};

/// No seed label is available to propagate from.
class propagation_error : public data_error {
public:
    using data_error::data_error;
};

/// Optimization produced a non-finite loss (exit status 4).
class training_error : public error {
public:
    using error::error;
};

/// Caller violated a documented precondition (shape mismatch, empty operand).
class contract_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parent links do not form a forest.
class structural_error : public error {
public:
    using error::error;
};

}  // namespace delala
