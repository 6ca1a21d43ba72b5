// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "kron/tensor.hpp"

namespace kron {

/// Scalar width of a tensor file's payload. In memory everything is f64;
/// an f32 payload widens on load and narrows on store.
enum class Dtype { f64, f32 };

/// A tensor read from disk, with the header fields that matter to callers.
struct LoadedTensor {
    std::string name;
    Dtype dtype = Dtype::f64;
    DenseTensor tensor;

    LoadedTensor() : tensor(Shape{1}) {}
    LoadedTensor(std::string n, Dtype d, DenseTensor t)
        : name(std::move(n)), dtype(d), tensor(std::move(t)) {}
};

/// File layout: a line-oriented text header
///
///   tensorfile 1
///   name: conv1
///   dtype: f64
///   shape: 8,4,3,3
///   order: little
///   offset: 000000000093
///
/// followed by the raw little-endian payload at the stated byte offset,
/// row-major, element count times scalar size bytes, nothing after it.
///
/// Writes go through a temp file and a rename, so a failed write never
/// leaves a partial file at the target path. Throws io_error on any file
/// or header problem. Names are limited to [A-Za-z0-9_.-].
void write_tensor_file(const std::filesystem::path& path, const std::string& name,
                       const DenseTensor& tensor, Dtype dtype = Dtype::f64);

LoadedTensor read_tensor_file(const std::filesystem::path& path);

std::string dtype_name(Dtype d);

}  // namespace kron
