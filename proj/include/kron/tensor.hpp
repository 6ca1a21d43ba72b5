// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kron/error.hpp"

namespace kron {

/// Extent per dimension. Entries are always >= 1.
using Shape = std::vector<std::size_t>;

/// Position inside a tensor; same length as the tensor's shape,
/// indices[n] < shape[n].
using MultiIndex = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);

/// Row-major flat offset of a multi-index (last index varies fastest).
std::size_t flat_index(const Shape& shape, const MultiIndex& index);

/// Inverse of flat_index.
MultiIndex unflatten(const Shape& shape, std::size_t flat);

/// Row-major strides: strides[n] = product of shape[n+1..].
std::vector<std::size_t> row_major_strides(const Shape& shape);

/// Dense N-dimensional tensor of 64-bit reals, row-major storage.
/// Immutable-by-convention value type: operations return new tensors.
class DenseTensor {
public:
    explicit DenseTensor(Shape shape, double fill = 0.0);
    DenseTensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    double at(const MultiIndex& index) const { return data_[flat_index(shape_, index)]; }
    double& at(const MultiIndex& index) { return data_[flat_index(shape_, index)]; }

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Quotient/remainder split of one index: i = j * divisor + k with k < divisor.
std::pair<std::size_t, std::size_t> split_index(std::size_t i, std::size_t divisor);

/// Multidimensional Kronecker product. Result shape is the elementwise
/// product of the operand shapes; element i is a[i / b.shape] * b[i % b.shape]
/// per dimension.
DenseTensor kron(const DenseTensor& a, const DenseTensor& b);

/// out += kron(a, b); out must already have the product shape.
void kron_accumulate(DenseTensor& out, const DenseTensor& a, const DenseTensor& b);

/// Extracts all non-overlapping patches of shape `patch` from w. Result has
/// shape [N_p, patch...] with patches enumerated row-major over the patch grid.
DenseTensor unfold(const DenseTensor& w, const Shape& patch);

/// Reassembles the output of unfold back into a tensor of shape `full`.
DenseTensor refold(const DenseTensor& patches, const Shape& full);

double frobenius_norm(const DenseTensor& w);

}  // namespace kron
