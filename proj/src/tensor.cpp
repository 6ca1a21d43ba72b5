// SPDX-License-Identifier: Apache-2.0

#include "kron/tensor.hpp"

#include <cmath>
#include <string>

namespace kron {

namespace {

void check_shape_valid(const Shape& shape) {
    if (shape.empty()) {
        throw shape_error("tensor shape must have at least one dimension");
    }
    for (std::size_t n = 0; n < shape.size(); ++n) {
        if (shape[n] == 0) {
            throw shape_error("tensor shape entry " + std::to_string(n) + " is zero");
        }
    }
}

}  // namespace

std::size_t element_count(const Shape& shape) {
    std::size_t count = 1;
    for (std::size_t extent : shape) count *= extent;
    return count;
}

std::size_t flat_index(const Shape& shape, const MultiIndex& index) {
    std::size_t flat = 0;
    for (std::size_t n = 0; n < shape.size(); ++n) {
        flat = flat * shape[n] + index[n];
    }
    return flat;
}

MultiIndex unflatten(const Shape& shape, std::size_t flat) {
    MultiIndex index(shape.size());
    for (std::size_t n = shape.size(); n-- > 0;) {
        index[n] = flat % shape[n];
        flat /= shape[n];
    }
    return index;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size());
    std::size_t acc = 1;
    for (std::size_t n = shape.size(); n-- > 0;) {
        strides[n] = acc;
        acc *= shape[n];
    }
    return strides;
}

DenseTensor::DenseTensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {
    check_shape_valid(shape_);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape_valid(shape_);
    if (data_.size() != element_count(shape_)) {
        throw shape_error("data length " + std::to_string(data_.size()) +
                          " does not match shape element count " +
                          std::to_string(element_count(shape_)));
    }
}

std::pair<std::size_t, std::size_t> split_index(std::size_t i, std::size_t divisor) {
    return {i / divisor, i % divisor};
}

void kron_accumulate(DenseTensor& out, const DenseTensor& a, const DenseTensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != sb.size()) {
        throw shape_error("kron operands differ in dimension count: " +
                          std::to_string(sa.size()) + " vs " + std::to_string(sb.size()));
    }
    const std::size_t ndim = sa.size();
    Shape product(ndim);
    for (std::size_t n = 0; n < ndim; ++n) product[n] = sa[n] * sb[n];
    if (out.shape() != product) {
        throw shape_error("kron accumulator shape does not match operand product shape");
    }

    const auto out_strides = row_major_strides(product);

    // Output offset of element (j, k) splits as base(j) + inner(k); the inner
    // table is shared across all positions of the moving block.
    std::vector<std::size_t> inner(b.size());
    {
        MultiIndex kb(ndim, 0);
        for (std::size_t t = 0; t < b.size(); ++t) {
            std::size_t off = 0;
            for (std::size_t n = 0; n < ndim; ++n) off += kb[n] * out_strides[n];
            inner[t] = off;
            for (std::size_t n = ndim; n-- > 0;) {
                if (++kb[n] < sb[n]) break;
                kb[n] = 0;
            }
        }
    }

    MultiIndex ja(ndim, 0);
    std::span<double> dst = out.data();
    std::span<const double> bsrc = b.data();
    for (std::size_t s = 0; s < a.size(); ++s) {
        std::size_t base = 0;
        for (std::size_t n = 0; n < ndim; ++n) base += ja[n] * sb[n] * out_strides[n];
        const double scale = a[s];
        for (std::size_t t = 0; t < bsrc.size(); ++t) {
            dst[base + inner[t]] += scale * bsrc[t];
        }
        for (std::size_t n = ndim; n-- > 0;) {
            if (++ja[n] < sa[n]) break;
            ja[n] = 0;
        }
    }
}

DenseTensor kron(const DenseTensor& a, const DenseTensor& b) {
    if (a.rank() != b.rank()) {
        throw shape_error("kron operands differ in dimension count: " +
                          std::to_string(a.rank()) + " vs " + std::to_string(b.rank()));
    }
    Shape product(a.rank());
    for (std::size_t n = 0; n < a.rank(); ++n) product[n] = a.shape()[n] * b.shape()[n];
    DenseTensor out(product, 0.0);
    kron_accumulate(out, a, b);
    return out;
}

namespace {

// Source offsets of one patch relative to its origin, in row-major order
// over the patch; shared by unfold and refold.
std::vector<std::size_t> patch_offsets(const Shape& full, const Shape& patch) {
    const auto strides = row_major_strides(full);
    std::vector<std::size_t> offsets(element_count(patch));
    MultiIndex p(patch.size(), 0);
    for (std::size_t t = 0; t < offsets.size(); ++t) {
        std::size_t off = 0;
        for (std::size_t n = 0; n < patch.size(); ++n) off += p[n] * strides[n];
        offsets[t] = off;
        for (std::size_t n = patch.size(); n-- > 0;) {
            if (++p[n] < patch[n]) break;
            p[n] = 0;
        }
    }
    return offsets;
}

void check_divisible(const Shape& full, const Shape& patch) {
    if (patch.size() != full.size()) {
        throw shape_error("patch shape has " + std::to_string(patch.size()) +
                          " dimensions, tensor has " + std::to_string(full.size()));
    }
    for (std::size_t n = 0; n < full.size(); ++n) {
        if (patch[n] == 0 || full[n] % patch[n] != 0) {
            throw shape_error("dimension " + std::to_string(n) + ": patch extent " +
                              std::to_string(patch[n]) + " does not divide tensor extent " +
                              std::to_string(full[n]));
        }
    }
}

}  // namespace

DenseTensor unfold(const DenseTensor& w, const Shape& patch) {
    check_divisible(w.shape(), patch);
    const std::size_t ndim = w.rank();

    Shape grid(ndim);
    for (std::size_t n = 0; n < ndim; ++n) grid[n] = w.shape()[n] / patch[n];
    const std::size_t n_patches = element_count(grid);
    const std::size_t patch_size = element_count(patch);

    Shape out_shape;
    out_shape.reserve(ndim + 1);
    out_shape.push_back(n_patches);
    out_shape.insert(out_shape.end(), patch.begin(), patch.end());
    DenseTensor out(out_shape, 0.0);

    const auto strides = row_major_strides(w.shape());
    const auto offsets = patch_offsets(w.shape(), patch);

    MultiIndex g(ndim, 0);
    std::span<const double> src = w.data();
    std::span<double> dst = out.data();
    for (std::size_t p = 0; p < n_patches; ++p) {
        std::size_t base = 0;
        for (std::size_t n = 0; n < ndim; ++n) base += g[n] * patch[n] * strides[n];
        double* block = dst.data() + p * patch_size;
        for (std::size_t t = 0; t < patch_size; ++t) block[t] = src[base + offsets[t]];
        for (std::size_t n = ndim; n-- > 0;) {
            if (++g[n] < grid[n]) break;
            g[n] = 0;
        }
    }
    return out;
}

DenseTensor refold(const DenseTensor& patches, const Shape& full) {
    if (patches.rank() != full.size() + 1) {
        throw shape_error("patch tensor rank must be one more than the target rank");
    }
    Shape patch(patches.shape().begin() + 1, patches.shape().end());
    check_divisible(full, patch);

    const std::size_t ndim = full.size();
    Shape grid(ndim);
    for (std::size_t n = 0; n < ndim; ++n) grid[n] = full[n] / patch[n];
    const std::size_t n_patches = element_count(grid);
    const std::size_t patch_size = element_count(patch);
    if (patches.shape()[0] != n_patches) {
        throw shape_error("patch count " + std::to_string(patches.shape()[0]) +
                          " does not match target grid of " + std::to_string(n_patches));
    }

    DenseTensor out(full, 0.0);
    const auto strides = row_major_strides(full);
    const auto offsets = patch_offsets(full, patch);

    MultiIndex g(ndim, 0);
    std::span<const double> src = patches.data();
    std::span<double> dst = out.data();
    for (std::size_t p = 0; p < n_patches; ++p) {
        std::size_t base = 0;
        for (std::size_t n = 0; n < ndim; ++n) base += g[n] * patch[n] * strides[n];
        const double* block = src.data() + p * patch_size;
        for (std::size_t t = 0; t < patch_size; ++t) dst[base + offsets[t]] = block[t];
        for (std::size_t n = ndim; n-- > 0;) {
            if (++g[n] < grid[n]) break;
            g[n] = 0;
        }
    }
    return out;
}

double frobenius_norm(const DenseTensor& w) {
    double sum_sq = 0.0;
    for (double v : w.data()) sum_sq += v * v;
    return std::sqrt(sum_sq);
}

}  // namespace kron
