// SPDX-License-Identifier: Apache-2.0

#include "kron/complexity.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <tuple>

namespace kron {

namespace {

void require_conv_pair(const FactorShapePair& pair) {
    if (pair.shape_a.size() != 4 || pair.shape_b.size() != 4) {
        throw shape_error("factor shapes must be 4-D conv layouts [F, C, Kh, Kw]");
    }
}

std::vector<std::size_t> divisors(std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t d = 1; d <= n; ++d) {
        if (n % d == 0) out.push_back(d);
    }
    return out;
}

std::size_t out_extent_checked(std::size_t in, std::size_t pad, std::size_t kernel,
                               std::size_t stride) {
    const std::size_t padded = in + 2 * pad;
    if (stride == 0) throw parameter_error("stride must be positive");
    if (padded < kernel) {
        throw shape_error("kernel extent " + std::to_string(kernel) +
                          " exceeds padded input extent " + std::to_string(padded));
    }
    return (padded - kernel) / stride + 1;
}

ConfigCandidate make_candidate(FactorShapePair pair, std::size_t r_hat) {
    ConfigCandidate c;
    c.params = static_cast<unsigned long long>(r_hat) *
               (element_count(pair.shape_a) + element_count(pair.shape_b));
    c.macs_per_position =
        static_cast<unsigned long long>(r_hat) *
        (pair.shape_b[0] * element_count(pair.shape_a) +
         pair.shape_a[1] * element_count(pair.shape_b));
    c.memory_reduction = memory_reduction(pair, r_hat);
    c.flops_reduction = flops_reduction(pair, r_hat);
    c.pair = std::move(pair);
    c.r_hat = r_hat;
    return c;
}

/// Deterministic candidate order: error (infinity when unsolved), then
/// params, then shape_a lexicographically, then r_hat.
bool candidate_less(const ConfigCandidate& x, const ConfigCandidate& y) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double ex = x.error.value_or(inf), ey = y.error.value_or(inf);
    if (ex != ey) return ex < ey;
    if (x.params != y.params) return x.params < y.params;
    if (x.pair.shape_a != y.pair.shape_a) return x.pair.shape_a < y.pair.shape_a;
    return x.r_hat < y.r_hat;
}

}  // namespace

double memory_reduction(const FactorShapePair& pair, std::size_t r_hat) {
    if (r_hat < 1) throw parameter_error("r_hat must be positive");
    const double sa = static_cast<double>(element_count(pair.shape_a));
    const double sb = static_cast<double>(element_count(pair.shape_b));
    return (sa * sb) / (static_cast<double>(r_hat) * (sa + sb));
}

double flops_reduction(const FactorShapePair& pair, std::size_t r_hat) {
    require_conv_pair(pair);
    if (r_hat < 1) throw parameter_error("r_hat must be positive");
    const double sa = static_cast<double>(element_count(pair.shape_a));
    const double sb = static_cast<double>(element_count(pair.shape_b));
    const double f2 = static_cast<double>(pair.shape_b[0]);
    const double c1 = static_cast<double>(pair.shape_a[1]);
    return (sa * sb) / (static_cast<double>(r_hat) * (f2 * sa + c1 * sb));
}

std::vector<ConfigCandidate> enumerate_candidates(const Shape& w_shape,
                                                  double min_flops_reduction,
                                                  std::size_t r_hat_lo,
                                                  std::size_t r_hat_hi) {
    if (w_shape.size() != 4) {
        throw shape_error("candidate enumeration expects a 4-D weight shape");
    }
    for (std::size_t d = 0; d < 4; ++d) {
        if (w_shape[d] == 0) throw shape_error("weight dimensions must be positive");
    }
    if (r_hat_lo < 1 || r_hat_hi < r_hat_lo) {
        throw parameter_error("invalid r_hat range [" + std::to_string(r_hat_lo) + ", " +
                              std::to_string(r_hat_hi) + "]");
    }

    std::vector<ConfigCandidate> out;
    const auto d0 = divisors(w_shape[0]), d1 = divisors(w_shape[1]);
    const auto d2 = divisors(w_shape[2]), d3 = divisors(w_shape[3]);
    for (std::size_t a0 : d0) {
        for (std::size_t a1 : d1) {
            for (std::size_t a2 : d2) {
                for (std::size_t a3 : d3) {
                    FactorShapePair pair;
                    pair.shape_a = {a0, a1, a2, a3};
                    pair.shape_b = {w_shape[0] / a0, w_shape[1] / a1, w_shape[2] / a2,
                                    w_shape[3] / a3};
                    const std::size_t rank = kronecker_rank(pair);
                    const std::size_t hi = std::min(r_hat_hi, rank);
                    for (std::size_t r = r_hat_lo; r <= hi; ++r) {
                        if (flops_reduction(pair, r) >= min_flops_reduction) {
                            out.push_back(make_candidate(pair, r));
                        }
                    }
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), candidate_less);
    return out;
}

SelectionResult select_configuration(const DenseTensor& w,
                                     std::vector<ConfigCandidate> candidates) {
    if (candidates.empty()) {
        throw parameter_error("no candidates to select from");
    }
    const double w_norm = frobenius_norm(w);

    SelectionResult result;
    const ConfigCandidate* best = nullptr;
    for (auto& c : candidates) {
        GkpdDecomposition d = gkpd_solve(w, c.pair, c.r_hat);
        c.error = w_norm > 0.0 ? d.achieved_error / w_norm : d.achieved_error;
        if (best == nullptr || candidate_less(c, *best)) {
            best = &c;
            result.decomposition = std::move(d);
        }
    }
    std::sort(candidates.begin(), candidates.end(), candidate_less);
    result.candidates = std::move(candidates);
    result.winner = 0;
    return result;
}

unsigned long long count_macs_direct(const Shape& w_shape, const InputGeometry& in) {
    if (w_shape.size() != 4) throw shape_error("weight shape must be 4-D");
    const std::size_t out_h =
        out_extent_checked(in.in_h, in.geom.pad_h, w_shape[2], in.geom.stride_h);
    const std::size_t out_w =
        out_extent_checked(in.in_w, in.geom.pad_w, w_shape[3], in.geom.stride_w);
    return static_cast<unsigned long long>(element_count(w_shape)) * out_h * out_w;
}

unsigned long long count_macs_kron(const FactorShapePair& pair, std::size_t r_hat,
                                   const InputGeometry& in) {
    require_conv_pair(pair);
    if (r_hat < 1) throw parameter_error("r_hat must be positive");
    const std::size_t kh = pair.shape_a[2] * pair.shape_b[2];
    const std::size_t kw = pair.shape_a[3] * pair.shape_b[3];
    const std::size_t out_h = out_extent_checked(in.in_h, in.geom.pad_h, kh, in.geom.stride_h);
    const std::size_t out_w = out_extent_checked(in.in_w, in.geom.pad_w, kw, in.geom.stride_w);
    const std::size_t h1 = in.in_h + 2 * in.geom.pad_h - pair.shape_b[2] + 1;
    const std::size_t w1 = in.in_w + 2 * in.geom.pad_w - pair.shape_b[3] + 1;

    const unsigned long long f1 = pair.shape_a[0], c1 = pair.shape_a[1];
    const unsigned long long kh1 = pair.shape_a[2], kw1 = pair.shape_a[3];
    const unsigned long long f2 = pair.shape_b[0], c2 = pair.shape_b[1];
    const unsigned long long kh2 = pair.shape_b[2], kw2 = pair.shape_b[3];
    const unsigned long long stage1 = f2 * c1 * (c2 * kh2 * kw2) * h1 * w1;
    const unsigned long long stage2 = f1 * f2 * (c1 * kh1 * kw1) * out_h * out_w;
    return static_cast<unsigned long long>(r_hat) * (stage1 + stage2);
}

}  // namespace kron
