// SPDX-License-Identifier: Apache-2.0

#include "kron/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <vector>

namespace kron {

namespace {

constexpr char kMagic[] = "tensorfile 1";
constexpr int kOffsetDigits = 12;

bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
        if (!ok) return false;
    }
    return true;
}

std::string shape_to_string(const Shape& shape) {
    std::string out;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        if (n) out += ',';
        out += std::to_string(shape[n]);
    }
    return out;
}

void append_le(std::string& out, std::uint64_t bits, int bytes) {
    for (int i = 0; i < bytes; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

std::uint64_t read_le(const unsigned char* p, int bytes) {
    std::uint64_t bits = 0;
    for (int i = 0; i < bytes; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return bits;
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
    throw io_error(path.string() + ": " + what);
}

std::string take_field(const std::string& line, const char* key,
                       const std::filesystem::path& path) {
    const std::string prefix = std::string(key) + ": ";
    if (line.size() <= prefix.size() || line.compare(0, prefix.size(), prefix) != 0) {
        malformed(path, std::string("expected '") + key + ":' header line");
    }
    return line.substr(prefix.size());
}

Shape parse_shape(const std::string& text, const std::filesystem::path& path) {
    Shape shape;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string part = text.substr(pos, comma - pos);
        if (part.empty() || part.size() > 12 ||
            part.find_first_not_of("0123456789") != std::string::npos) {
            malformed(path, "bad shape entry '" + part + "'");
        }
        const unsigned long long v = std::stoull(part);
        if (v == 0) malformed(path, "zero shape entry");
        shape.push_back(static_cast<std::size_t>(v));
        if (comma == text.size()) break;
        pos = comma + 1;
    }
    if (shape.empty()) malformed(path, "empty shape");
    return shape;
}

}  // namespace

std::string dtype_name(Dtype d) { return d == Dtype::f64 ? "f64" : "f32"; }

void write_tensor_file(const std::filesystem::path& path, const std::string& name,
                       const DenseTensor& tensor, Dtype dtype) {
    if (!valid_name(name)) {
        throw io_error("tensor name '" + name + "' not in [A-Za-z0-9_.-]");
    }

    std::string head;
    head += kMagic;
    head += "\nname: " + name;
    head += "\ndtype: " + dtype_name(dtype);
    head += "\nshape: " + shape_to_string(tensor.shape());
    head += "\norder: little\noffset: ";
    const std::size_t offset = head.size() + kOffsetDigits + 1;
    char digits[kOffsetDigits + 1];
    std::snprintf(digits, sizeof digits, "%012zu", offset);
    head += digits;
    head += '\n';

    std::string payload;
    payload.reserve(tensor.size() * (dtype == Dtype::f64 ? 8 : 4));
    for (double v : tensor.data()) {
        if (dtype == Dtype::f64) {
            append_le(payload, std::bit_cast<std::uint64_t>(v), 8);
        } else {
            append_le(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
        }
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out.write(head.data(), static_cast<std::streamsize>(head.size()));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw io_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw io_error("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

LoadedTensor read_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());

    auto next_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) malformed(path, std::string("truncated header at ") + what);
        return line;
    };

    if (next_line("magic") != kMagic) malformed(path, "bad magic line");
    const std::string name = take_field(next_line("name"), "name", path);
    if (!valid_name(name)) malformed(path, "bad tensor name");
    const std::string dtype_text = take_field(next_line("dtype"), "dtype", path);
    Dtype dtype;
    if (dtype_text == "f64") {
        dtype = Dtype::f64;
    } else if (dtype_text == "f32") {
        dtype = Dtype::f32;
    } else {
        malformed(path, "unknown dtype '" + dtype_text + "'");
    }
    const Shape shape = parse_shape(take_field(next_line("shape"), "shape", path), path);
    if (take_field(next_line("order"), "order", path) != "little") {
        malformed(path, "unsupported byte order");
    }
    const std::string offset_text = take_field(next_line("offset"), "offset", path);
    if (offset_text.size() != kOffsetDigits ||
        offset_text.find_first_not_of("0123456789") != std::string::npos) {
        malformed(path, "bad offset field");
    }
    const std::uint64_t offset = std::stoull(offset_text);
    const std::uint64_t header_end = static_cast<std::uint64_t>(in.tellg());
    if (offset < header_end) malformed(path, "offset points inside the header");

    const std::size_t count = element_count(shape);
    const std::size_t scalar = dtype == Dtype::f64 ? 8 : 4;
    const std::uint64_t expected_size = offset + count * scalar;
    const std::uint64_t actual_size = std::filesystem::file_size(path);
    if (actual_size < expected_size) malformed(path, "payload shorter than the shape implies");
    if (actual_size > expected_size) malformed(path, "trailing bytes after the payload");

    in.seekg(static_cast<std::streamoff>(offset));
    std::vector<unsigned char> raw(count * scalar);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) malformed(path, "payload read failed");

    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (dtype == Dtype::f64) {
            values[i] = std::bit_cast<double>(read_le(raw.data() + i * 8, 8));
        } else {
            values[i] = static_cast<double>(std::bit_cast<float>(
                static_cast<std::uint32_t>(read_le(raw.data() + i * 4, 4))));
        }
    }
    return LoadedTensor(name, dtype, DenseTensor(shape, std::move(values)));
}

}  // namespace kron
