// SPDX-License-Identifier: Apache-2.0

#include "kron/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace kron {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw shape_error("matmul dimension mismatch: " + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()));
    }
    Matrix out(a.rows(), b.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

double frobenius_norm(const Matrix& m) {
    double sum_sq = 0.0;
    for (double v : m.data()) sum_sq += v * v;
    return std::sqrt(sum_sq);
}

Matrix SvdResult::reconstruct() const {
    Matrix out(u.rows(), v.rows(), 0.0);
    for (std::size_t i = 0; i < u.rows(); ++i) {
        for (std::size_t r = 0; r < s.size(); ++r) {
            const double scale = u(i, r) * s[r];
            if (scale == 0.0) continue;
            for (std::size_t j = 0; j < v.rows(); ++j) {
                out(i, j) += scale * v(j, r);
            }
        }
    }
    return out;
}

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 60;

// One-sided Jacobi on the columns of work (column-major, m x n, m >= n).
// On exit the columns of work are mutually orthogonal and equal U * Sigma;
// vmat accumulates the applied rotations (column-major, n x n).
void jacobi_orthogonalize(std::vector<double>& work, std::vector<double>& vmat,
                          std::size_t m, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) vmat[j * n + j] = 1.0;
    if (n < 2) return;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* cp = work.data() + p * m;
                double* cq = work.data() + q * m;
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                if (std::abs(apq) <= kJacobiTol * std::sqrt(app * aqq)) continue;

                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double wp = cp[i], wq = cq[i];
                    cp[i] = c * wp - s * wq;
                    cq[i] = s * wp + c * wq;
                }
                double* vp = vmat.data() + p * n;
                double* vq = vmat.data() + q * n;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = vp[i], wq = vq[i];
                    vp[i] = c * wp - s * wq;
                    vq[i] = s * wp + c * wq;
                }
                rotated = true;
            }
        }
        if (!rotated) return;
    }
    throw numeric_error("Jacobi SVD did not converge within " +
                        std::to_string(kMaxSweeps) + " sweeps");
}

// Replaces near-zero columns of u (column-major, m x r) with unit vectors
// orthogonal to all other columns. Deterministic: among the standard basis
// vectors, the one with the largest residual after projection wins.
void complete_basis(std::vector<double>& u, std::size_t m, std::size_t r,
                    const std::vector<bool>& needs_fill) {
    for (std::size_t col = 0; col < r; ++col) {
        if (!needs_fill[col]) continue;
        std::size_t best_k = 0;
        double best_norm = -1.0;
        std::vector<double> best(m), cand(m);
        for (std::size_t k = 0; k < m; ++k) {
            std::fill(cand.begin(), cand.end(), 0.0);
            cand[k] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t j = 0; j < r; ++j) {
                    if (j == col || needs_fill[j]) continue;
                    const double* cj = u.data() + j * m;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += cand[i] * cj[i];
                    for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * cj[i];
                }
                // Earlier completed columns participate too.
                for (std::size_t j = 0; j < col; ++j) {
                    if (!needs_fill[j]) continue;
                    const double* cj = u.data() + j * m;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += cand[i] * cj[i];
                    for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * cj[i];
                }
            }
            double norm_sq = 0.0;
            for (double v : cand) norm_sq += v * v;
            if (norm_sq > best_norm) {
                best_norm = norm_sq;
                best_k = k;
                best = cand;
            }
        }
        (void)best_k;
        const double inv = 1.0 / std::sqrt(best_norm);
        double* dst = u.data() + col * m;
        for (std::size_t i = 0; i < m; ++i) dst[i] = best[i] * inv;
    }
}

SvdResult svd_tall(const Matrix& input) {
    const std::size_t m = input.rows();
    const std::size_t n = input.cols();

    std::vector<double> work(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) work[j * m + i] = input(i, j);
    std::vector<double> vmat(n * n, 0.0);
    jacobi_orthogonalize(work, vmat, m, n);

    std::vector<double> sigma(n);
    double sigma_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double norm_sq = 0.0;
        const double* cj = work.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) norm_sq += cj[i] * cj[i];
        sigma[j] = std::sqrt(norm_sq);
        sigma_max = std::max(sigma_max, sigma[j]);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    const double zero_tol =
        sigma_max * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m, n));

    std::vector<double> ucols(m * n, 0.0);
    std::vector<bool> needs_fill(n, false);
    std::vector<double> s_sorted(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = sigma[src];
        if (sigma[src] <= zero_tol) {
            needs_fill[j] = true;
            continue;
        }
        const double inv = 1.0 / sigma[src];
        const double* from = work.data() + src * m;
        double* to = ucols.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) to[i] = from[i] * inv;
    }
    complete_basis(ucols, m, n, needs_fill);

    SvdResult out;
    out.s = std::move(s_sorted);
    out.u = Matrix(m, n);
    out.v = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        // Sign convention: first nonzero entry of each u column non-negative.
        double lead = 0.0;
        const double* uc = ucols.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) {
            if (uc[i] != 0.0) {
                lead = uc[i];
                break;
            }
        }
        const double flip = lead < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < m; ++i) out.u(i, j) = flip * uc[i];
        const double* vc = vmat.data() + src * n;
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = flip * vc[i];
    }
    return out;
}

}  // namespace

SvdResult svd_full(const Matrix& input) {
    if (input.rows() == 0 || input.cols() == 0) {
        throw shape_error("svd of an empty matrix");
    }
    for (double v : input.data()) {
        if (!std::isfinite(v)) throw numeric_error("svd input contains a non-finite value");
    }
    if (input.rows() >= input.cols()) return svd_tall(input);

    // Wide case: decompose the transpose and swap the roles of u and v. The
    // sign convention is re-applied so it always refers to u.
    SvdResult t = svd_tall(input.transposed());
    SvdResult out;
    out.s = std::move(t.s);
    out.u = std::move(t.v);
    out.v = std::move(t.u);
    for (std::size_t j = 0; j < out.s.size(); ++j) {
        double lead = 0.0;
        for (std::size_t i = 0; i < out.u.rows(); ++i) {
            if (out.u(i, j) != 0.0) {
                lead = out.u(i, j);
                break;
            }
        }
        if (lead < 0.0) {
            for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, j) = -out.v(i, j);
        }
    }
    return out;
}

SvdResult svd_truncated(const Matrix& input, std::size_t rank) {
    const std::size_t full_rank = std::min(input.rows(), input.cols());
    if (rank < 1 || rank > full_rank) {
        throw parameter_error("svd truncation rank " + std::to_string(rank) +
                              " outside [1, " + std::to_string(full_rank) + "]");
    }
    SvdResult full = svd_full(input);
    if (rank == full_rank) return full;

    SvdResult out;
    out.s.assign(full.s.begin(), full.s.begin() + static_cast<std::ptrdiff_t>(rank));
    out.u = Matrix(full.u.rows(), rank);
    out.v = Matrix(full.v.rows(), rank);
    for (std::size_t j = 0; j < rank; ++j) {
        for (std::size_t i = 0; i < full.u.rows(); ++i) out.u(i, j) = full.u(i, j);
        for (std::size_t i = 0; i < full.v.rows(); ++i) out.v(i, j) = full.v(i, j);
    }
    return out;
}

}  // namespace kron
