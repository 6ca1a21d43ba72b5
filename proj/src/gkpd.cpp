// SPDX-License-Identifier: Apache-2.0

#include "kron/gkpd.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "kron/linalg.hpp"

namespace kron {

void validate_pair(const FactorShapePair& pair, const Shape& target) {
    if (pair.shape_a.size() != target.size() || pair.shape_b.size() != target.size()) {
        throw shape_error("factor shapes must have the same rank as the target (" +
                          std::to_string(target.size()) + ")");
    }
    for (std::size_t n = 0; n < target.size(); ++n) {
        if (pair.shape_a[n] == 0 || pair.shape_b[n] == 0 ||
            pair.shape_a[n] * pair.shape_b[n] != target[n]) {
            throw shape_error("dimension " + std::to_string(n) + ": " +
                              std::to_string(pair.shape_a[n]) + " * " +
                              std::to_string(pair.shape_b[n]) + " != " +
                              std::to_string(target[n]));
        }
    }
}

std::size_t kronecker_rank(const FactorShapePair& pair) {
    return std::min(element_count(pair.shape_a), element_count(pair.shape_b));
}

Matrix rearrange_w(const DenseTensor& w, const Shape& shape_b) {
    DenseTensor patches = unfold(w, shape_b);
    const std::size_t rows = patches.shape()[0];
    const std::size_t cols = patches.size() / rows;
    Matrix m(rows, cols);
    std::memcpy(m.data().data(), patches.data().data(), patches.size() * sizeof(double));
    return m;
}

std::vector<double> rearrange_a(const DenseTensor& a) {
    return std::vector<double>(a.data().begin(), a.data().end());
}

std::vector<double> rearrange_b(const DenseTensor& b) {
    return std::vector<double>(b.data().begin(), b.data().end());
}

GkpdDecomposition gkpd_solve(const DenseTensor& w, const FactorShapePair& pair,
                             std::size_t r_hat) {
    validate_pair(pair, w.shape());
    const std::size_t full_rank = kronecker_rank(pair);
    if (r_hat < 1 || r_hat > full_rank) {
        throw parameter_error("r_hat " + std::to_string(r_hat) + " outside [1, " +
                              std::to_string(full_rank) + "]");
    }

    const Matrix m = rearrange_w(w, pair.shape_b);
    const SvdResult svd = svd_full(m);

    const double sigma_max = svd.s.empty() ? 0.0 : svd.s[0];
    const double zero_tol = sigma_max * std::numeric_limits<double>::epsilon() *
                            static_cast<double>(std::max(m.rows(), m.cols()));

    GkpdDecomposition d;
    d.target_shape = w.shape();
    d.pair_shapes = pair;
    d.r_hat = r_hat;
    d.factors_a.reserve(r_hat);
    d.factors_b.reserve(r_hat);

    const std::size_t size_a = element_count(pair.shape_a);
    const std::size_t size_b = element_count(pair.shape_b);
    for (std::size_t r = 0; r < r_hat; ++r) {
        std::vector<double> vec_a(size_a, 0.0);
        std::vector<double> vec_b(size_b, 0.0);
        if (svd.s[r] > zero_tol) {
            const double w_r = std::sqrt(svd.s[r]);
            for (std::size_t i = 0; i < size_a; ++i) vec_a[i] = svd.u(i, r) * w_r;
            for (std::size_t i = 0; i < size_b; ++i) vec_b[i] = svd.v(i, r) * w_r;
        }
        d.factors_a.emplace_back(pair.shape_a, std::move(vec_a));
        d.factors_b.emplace_back(pair.shape_b, std::move(vec_b));
    }

    double tail = 0.0;
    for (std::size_t r = r_hat; r < svd.s.size(); ++r) tail += svd.s[r] * svd.s[r];
    d.singular_tail_sq = tail;
    d.achieved_error = reconstruction_error(w, d);
    return d;
}

DenseTensor reconstruct(const GkpdDecomposition& d) {
    if (d.factors_a.size() != d.factors_b.size()) {
        throw shape_error("factor lists differ in length");
    }
    DenseTensor out(d.target_shape, 0.0);
    for (std::size_t r = 0; r < d.factors_a.size(); ++r) {
        kron_accumulate(out, d.factors_a[r], d.factors_b[r]);
    }
    return out;
}

double reconstruction_error(const DenseTensor& w, const GkpdDecomposition& d) {
    if (w.shape() != d.target_shape) {
        throw shape_error("tensor shape does not match the decomposition target");
    }
    DenseTensor recon = reconstruct(d);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double diff = w[i] - recon[i];
        sum_sq += diff * diff;
    }
    return std::sqrt(sum_sq);
}

}  // namespace kron
