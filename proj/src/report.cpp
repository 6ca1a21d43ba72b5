// SPDX-License-Identifier: Apache-2.0

#include "kron/report.hpp"

#include <cstdio>

#include <json.hpp>

namespace kron {

namespace {

constexpr const char* kSeparableNote =
    "separable 3x3 kernels split as a carrying 3x1 and b carrying 1x3";

std::string join_shape(const Shape& shape) {
    std::string out;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        if (n) out += ',';
        out += std::to_string(shape[n]);
    }
    return out;
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

}  // namespace

Report make_report(const std::string& tensor_name, const Shape& tensor_shape,
                   const SelectionResult& selection) {
    Report report;
    report.tensor_name = tensor_name;
    report.tensor_shape = tensor_shape;
    report.rows.reserve(selection.candidates.size());
    for (std::size_t i = 0; i < selection.candidates.size(); ++i) {
        const ConfigCandidate& c = selection.candidates[i];
        ReportRow row;
        row.shape_a = c.pair.shape_a;
        row.shape_b = c.pair.shape_b;
        row.r_hat = c.r_hat;
        row.params = c.params;
        row.memory_reduction = c.memory_reduction;
        row.flops_reduction = c.flops_reduction;
        row.rel_error = c.error.value_or(0.0);
        row.chosen = i == selection.winner;
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string render_text(const Report& report) {
    std::string out;
    out += std::string(kToolVersion) + " report-format " + kReportFormatVersion + "\n";
    out += "tensor: " + report.tensor_name + "\n";
    out += "shape: " + join_shape(report.tensor_shape) + "\n";
    for (const auto& [key, value] : report.context) {
        out += key + ": " + value + "\n";
    }
    out += std::string("note: ") + kSeparableNote + "\n";
    out += "columns: shape_a shape_b r_hat params memory_x flops_x rel_error chosen\n";
    for (const ReportRow& row : report.rows) {
        out += "row: " + join_shape(row.shape_a) + " " + join_shape(row.shape_b) + " " +
               std::to_string(row.r_hat) + " " + std::to_string(row.params) + " " +
               fmt("%.6f", row.memory_reduction) + " " + fmt("%.6f", row.flops_reduction) +
               " " + fmt("%.12e", row.rel_error) + (row.chosen ? " *" : " -") + "\n";
    }
    return out;
}

std::string render_json(const Report& report) {
    nlohmann::ordered_json j;
    j["tool"] = kToolVersion;
    j["format"] = kReportFormatVersion;
    j["tensor"] = report.tensor_name;
    j["shape"] = report.tensor_shape;
    nlohmann::ordered_json ctx = nlohmann::ordered_json::object();
    for (const auto& [key, value] : report.context) ctx[key] = value;
    j["context"] = ctx;
    j["note"] = kSeparableNote;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const ReportRow& row : report.rows) {
        nlohmann::ordered_json r;
        r["shape_a"] = row.shape_a;
        r["shape_b"] = row.shape_b;
        r["r_hat"] = row.r_hat;
        r["params"] = row.params;
        r["memory_reduction"] = row.memory_reduction;
        r["flops_reduction"] = row.flops_reduction;
        r["rel_error"] = row.rel_error;
        r["chosen"] = row.chosen;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

}  // namespace kron
