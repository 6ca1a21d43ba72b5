// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kron/complexity.hpp"
#include "kron/tensor.hpp"

namespace kron {

inline constexpr const char* kToolVersion = "kronpack 1.0.0";
inline constexpr const char* kReportFormatVersion = "1";

/// One candidate configuration, ready for printing.
struct ReportRow {
    Shape shape_a;
    Shape shape_b;
    std::size_t r_hat = 1;
    unsigned long long params = 0;
    double memory_reduction = 0.0;
    double flops_reduction = 0.0;
    double rel_error = 0.0;
    bool chosen = false;
};

/// A candidate table for one tensor. Rows keep the order they were given
/// (selection already sorts by error and tie-breaks); exactly one row is
/// flagged chosen.
struct Report {
    std::string tensor_name;
    Shape tensor_shape;
    /// Free-form key/value lines echoing the request, printed in order.
    std::vector<std::pair<std::string, std::string>> context;
    std::vector<ReportRow> rows;
};

/// Builds a report from selection output; candidates must carry errors.
Report make_report(const std::string& tensor_name, const Shape& tensor_shape,
                   const SelectionResult& selection);

/// Line-oriented text rendering. Byte-deterministic: fixed float formats,
/// no timestamps, pinned tool and format version.
std::string render_text(const Report& report);

/// JSON rendering with the same field set, also byte-deterministic.
std::string render_json(const Report& report);

}  // namespace kron
