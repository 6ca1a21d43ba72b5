// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace kron {

/// Tensor/factor shapes are inconsistent (mismatched ranks, non-divisible
/// dimensions, incompatible factor products).
class shape_error : public std::runtime_error {
public:
    explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-finite input, or an iteration that did not converge.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// A scalar argument is out of its valid range (e.g. a rank larger than the
/// matrix admits).
class parameter_error : public std::invalid_argument {
public:
    explicit parameter_error(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be opened, read, written, or parsed as a tensor file.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kron
