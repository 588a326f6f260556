#pragma once

#include <stdexcept>
#include <string>

namespace mmvb {

// Shape/dimension mismatches; message carries both shapes.
class shape_error : public std::runtime_error {
public:
    explicit shape_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated API preconditions (non-scalar loss, empty expert set, ...).
class contract_error : public std::runtime_error {
public:
    explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad experiment configuration files.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem and serialization failures.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN gradients or losses during optimization; names the offending tensor.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mmvb
