// SPDX-License-Identifier: Apache-2.0

#include "kron/kronconv.hpp"

#include <string>

namespace kron {

namespace {

void require_rank(const DenseTensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw shape_error(std::string(what) + " must have rank " + std::to_string(rank) +
                          ", got " + std::to_string(t.rank()));
    }
}

void require_positive_stride(const ConvGeometry& g) {
    if (g.stride_h == 0 || g.stride_w == 0) {
        throw parameter_error("stride must be positive");
    }
}

std::size_t out_extent(std::size_t in, std::size_t pad, std::size_t kernel,
                       std::size_t stride) {
    const std::size_t padded = in + 2 * pad;
    if (padded < kernel) {
        throw shape_error("kernel extent " + std::to_string(kernel) +
                          " exceeds padded input extent " + std::to_string(padded));
    }
    return (padded - kernel) / stride + 1;
}

/// Input zero-padded symmetrically in both spatial dimensions.
DenseTensor pad_input(const DenseTensor& x, std::size_t pad_h, std::size_t pad_w) {
    if (pad_h == 0 && pad_w == 0) return x;
    const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    const std::size_t hp = h + 2 * pad_h, wp = w + 2 * pad_w;
    DenseTensor out({c, hp, wp}, 0.0);
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t y = 0; y < h; ++y) {
            const double* src = x.data().data() + (ci * h + y) * w;
            double* dst = out.data().data() + (ci * hp + y + pad_h) * wp + pad_w;
            for (std::size_t xi = 0; xi < w; ++xi) dst[xi] = src[xi];
        }
    }
    return out;
}

}  // namespace

DenseTensor conv2d_direct(const DenseTensor& w, const DenseTensor& x,
                          const ConvGeometry& g, MacCounter* counter) {
    require_rank(w, 4, "weight");
    require_rank(x, 3, "input");
    require_positive_stride(g);
    const std::size_t f = w.shape()[0], c = w.shape()[1];
    const std::size_t kh = w.shape()[2], kw = w.shape()[3];
    if (x.shape()[0] != c) {
        throw shape_error("input has " + std::to_string(x.shape()[0]) +
                          " channels, weight expects " + std::to_string(c));
    }
    const std::size_t out_h = out_extent(x.shape()[1], g.pad_h, kh, g.stride_h);
    const std::size_t out_w = out_extent(x.shape()[2], g.pad_w, kw, g.stride_w);

    const DenseTensor xp = pad_input(x, g.pad_h, g.pad_w);
    const std::size_t hp = xp.shape()[1], wp = xp.shape()[2];

    DenseTensor y({f, out_h, out_w}, 0.0);
    unsigned long long macs = 0;
    for (std::size_t fi = 0; fi < f; ++fi) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t i = 0; i < kh; ++i) {
                for (std::size_t j = 0; j < kw; ++j) {
                    const double wv = w[((fi * c + ci) * kh + i) * kw + j];
                    for (std::size_t oy = 0; oy < out_h; ++oy) {
                        const double* row =
                            xp.data().data() + (ci * hp + oy * g.stride_h + i) * wp + j;
                        double* out_row = y.data().data() + (fi * out_h + oy) * out_w;
                        for (std::size_t ox = 0; ox < out_w; ++ox) {
                            out_row[ox] += wv * row[ox * g.stride_w];
                            ++macs;
                        }
                    }
                }
            }
        }
    }
    if (counter) counter->macs += macs;
    return y;
}

DenseTensor kron_conv_forward(const ConvFactorPair& pair, const DenseTensor& x,
                              const ConvGeometry& g, MacCounter* counter) {
    require_rank(pair.a, 4, "factor a");
    require_rank(pair.b, 4, "factor b");
    require_rank(x, 3, "input");
    require_positive_stride(g);
    const std::size_t f1 = pair.a.shape()[0], c1 = pair.a.shape()[1];
    const std::size_t kh1 = pair.a.shape()[2], kw1 = pair.a.shape()[3];
    const std::size_t f2 = pair.b.shape()[0], c2 = pair.b.shape()[1];
    const std::size_t kh2 = pair.b.shape()[2], kw2 = pair.b.shape()[3];
    const std::size_t c = c1 * c2, kh = kh1 * kh2, kw = kw1 * kw2;
    if (x.shape()[0] != c) {
        throw shape_error("input has " + std::to_string(x.shape()[0]) +
                          " channels, factors expect " + std::to_string(c));
    }
    const std::size_t out_h = out_extent(x.shape()[1], g.pad_h, kh, g.stride_h);
    const std::size_t out_w = out_extent(x.shape()[2], g.pad_w, kw, g.stride_w);

    const DenseTensor xp = pad_input(x, g.pad_h, g.pad_w);
    const std::size_t hp = xp.shape()[1], wp = xp.shape()[2];

    // Stage 1: slide b over every spatial position of the padded input,
    // pairing input channel c1*C2 + c2 with kernel channel c2.
    const std::size_t h1 = hp - kh2 + 1, w1 = wp - kw2 + 1;
    DenseTensor y1({f2, c1, h1, w1}, 0.0);
    unsigned long long macs = 0;
    for (std::size_t f2i = 0; f2i < f2; ++f2i) {
        for (std::size_t c1i = 0; c1i < c1; ++c1i) {
            for (std::size_t c2i = 0; c2i < c2; ++c2i) {
                const std::size_t ci = c1i * c2 + c2i;
                for (std::size_t i2 = 0; i2 < kh2; ++i2) {
                    for (std::size_t j2 = 0; j2 < kw2; ++j2) {
                        const double bv = pair.b[((f2i * c2 + c2i) * kh2 + i2) * kw2 + j2];
                        for (std::size_t y = 0; y < h1; ++y) {
                            const double* row = xp.data().data() + (ci * hp + y + i2) * wp + j2;
                            double* out_row =
                                y1.data().data() + ((f2i * c1 + c1i) * h1 + y) * w1;
                            for (std::size_t xi = 0; xi < w1; ++xi) {
                                out_row[xi] += bv * row[xi];
                                ++macs;
                            }
                        }
                    }
                }
            }
        }
    }

    // Stage 2: convolve each of the F2 intermediate maps with a, dilated by
    // b's spatial extent, at the original stride.
    DenseTensor y({f1 * f2, out_h, out_w}, 0.0);
    for (std::size_t f1i = 0; f1i < f1; ++f1i) {
        for (std::size_t f2i = 0; f2i < f2; ++f2i) {
            const std::size_t fi = f1i * f2 + f2i;
            for (std::size_t c1i = 0; c1i < c1; ++c1i) {
                for (std::size_t i1 = 0; i1 < kh1; ++i1) {
                    for (std::size_t j1 = 0; j1 < kw1; ++j1) {
                        const double av = pair.a[((f1i * c1 + c1i) * kh1 + i1) * kw1 + j1];
                        for (std::size_t oy = 0; oy < out_h; ++oy) {
                            const double* row = y1.data().data() +
                                                ((f2i * c1 + c1i) * h1 + oy * g.stride_h +
                                                 i1 * kh2) * w1 + j1 * kw2;
                            double* out_row = y.data().data() + (fi * out_h + oy) * out_w;
                            for (std::size_t ox = 0; ox < out_w; ++ox) {
                                out_row[ox] += av * row[ox * g.stride_w];
                                ++macs;
                            }
                        }
                    }
                }
            }
        }
    }
    if (counter) counter->macs += macs;
    return y;
}

DenseTensor kron_conv_sum_forward(const std::vector<ConvFactorPair>& pairs,
                                  const DenseTensor& x, const ConvGeometry& g,
                                  MacCounter* counter) {
    if (pairs.empty()) throw parameter_error("no factor pairs given");
    for (std::size_t r = 1; r < pairs.size(); ++r) {
        if (pairs[r].a.shape() != pairs[0].a.shape() ||
            pairs[r].b.shape() != pairs[0].b.shape()) {
            throw shape_error("factor pair " + std::to_string(r) +
                              " does not match the shape of pair 0");
        }
    }
    DenseTensor out = kron_conv_forward(pairs[0], x, g, counter);
    for (std::size_t r = 1; r < pairs.size(); ++r) {
        DenseTensor term = kron_conv_forward(pairs[r], x, g, counter);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += term[i];
    }
    return out;
}

DenseTensor kron_conv_sum_forward(const GkpdDecomposition& d, const DenseTensor& x,
                                  const ConvGeometry& g, MacCounter* counter) {
    return kron_conv_sum_forward(as_conv_factor_pairs(d), x, g, counter);
}

std::vector<ConvFactorPair> as_conv_factor_pairs(const GkpdDecomposition& d) {
    if (d.pair_shapes.shape_a.size() != 4) {
        throw shape_error("decomposition target is not a 4-D conv weight");
    }
    if (d.factors_a.size() != d.factors_b.size() || d.factors_a.empty()) {
        throw shape_error("decomposition holds no usable factor pairs");
    }
    std::vector<ConvFactorPair> pairs;
    pairs.reserve(d.factors_a.size());
    for (std::size_t r = 0; r < d.factors_a.size(); ++r) {
        pairs.push_back(ConvFactorPair{d.factors_a[r], d.factors_b[r]});
    }
    return pairs;
}

std::vector<double> kron_matvec(const Matrix& a, const Matrix& b,
                                const std::vector<double>& x) {
    const std::size_t n1 = a.cols(), n2 = b.cols();
    const std::size_t m1 = a.rows(), m2 = b.rows();
    if (x.size() != n1 * n2) {
        throw shape_error("vector length " + std::to_string(x.size()) +
                          " does not match factor columns " + std::to_string(n1 * n2));
    }
    // Column-stacked reshape: X(i2, i1) = x[i1 * n2 + i2].
    Matrix xm(n2, n1);
    for (std::size_t i1 = 0; i1 < n1; ++i1)
        for (std::size_t i2 = 0; i2 < n2; ++i2) xm(i2, i1) = x[i1 * n2 + i2];

    const Matrix ym = matmul(matmul(b, xm), a.transposed());

    std::vector<double> y(m1 * m2);
    for (std::size_t i1 = 0; i1 < m1; ++i1)
        for (std::size_t i2 = 0; i2 < m2; ++i2) y[i1 * m2 + i2] = ym(i2, i1);
    return y;
}

std::size_t merge_index(std::size_t quotient, std::size_t remainder, std::size_t divisor) {
    return quotient * divisor + remainder;
}

bool lemma1_check(const ConvFactorPair& pair, const DenseTensor& x,
                  const MultiIndex& offsets, IndexMerge merge) {
    if (pair.a.rank() != pair.b.rank()) {
        throw shape_error("factors differ in rank");
    }
    const std::size_t n = pair.a.rank();
    if (x.rank() != n || offsets.size() != n) {
        throw shape_error("input and offsets must match the factors' rank");
    }
    const DenseTensor w = kron(pair.a, pair.b);
    for (std::size_t d = 0; d < n; ++d) {
        if (w.shape()[d] + offsets[d] > x.shape()[d]) {
            throw shape_error("offset " + std::to_string(offsets[d]) +
                              " pushes dimension " + std::to_string(d) + " out of bounds");
        }
    }

    MultiIndex i(n, 0), shifted(n), merged(n);
    for (std::size_t flat = 0; flat < w.size(); ++flat) {
        std::size_t ja = 0, kb = 0;
        bool in_bounds = true;
        for (std::size_t d = 0; d < n; ++d) {
            const auto [q, r] = split_index(i[d], pair.b.shape()[d]);
            ja = ja * pair.a.shape()[d] + q;
            kb = kb * pair.b.shape()[d] + r;
            shifted[d] = i[d] + offsets[d];
            merged[d] = merge(q, r, pair.b.shape()[d]) + offsets[d];
            if (merged[d] >= x.shape()[d]) in_bounds = false;
        }
        if (!in_bounds) return false;
        const double lhs = w[flat] * x.at(shifted);
        const double rhs = (pair.a[ja] * pair.b[kb]) * x.at(merged);
        if (lhs != rhs) return false;

        for (std::size_t d = n; d-- > 0;) {
            if (++i[d] < w.shape()[d]) break;
            i[d] = 0;
        }
    }
    return true;
}

}  // namespace kron
