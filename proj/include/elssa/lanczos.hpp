#pragma once

#include "elssa/core.hpp"
#include "elssa/hankel.hpp"
#include "elssa/rng.hpp"

#include <algorithm>
#include <concepts>
#include <string>
#include <vector>

namespace elssa {

template <class Op>
concept LinearOperator = requires(const Op& op, const Eigen::VectorXd& x) {
    { op.rows() } -> std::convertible_to<Index>;
    { op.cols() } -> std::convertible_to<Index>;
    { op.matvec(x) } -> std::convertible_to<Eigen::VectorXd>;
    { op.rmatvec(x) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Ordered singular triples (sigma_i, u_i, v_i), sigmas non-increasing.
struct SvdTriples {
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;

    Index rank() const { return sigma.size(); }
};

/// Triples of an HbH trajectory operator together with its embedding geometry.
struct SvdTruncation {
    EmbeddingWindow window;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u; // (L_x * L_y) x r
    Eigen::MatrixXd v; // (K_x * K_y) x r

    Index rank() const { return sigma.size(); }

    RankOneTerm term(Index i) const { return RankOneTerm{sigma[i], u.col(i), v.col(i)}; }

    std::vector<RankOneTerm> terms(const std::vector<Index>& indices) const {
        std::vector<RankOneTerm> out;
        out.reserve(indices.size());
        for (Index i : indices) {
            require(i >= 0 && i < rank(), "triple index out of range");
            out.push_back(term(i));
        }
        return out;
    }
};

/// Number of leading triples with sigma_i >= rel_tol * sigma_1.
inline Index select_rank(const Eigen::VectorXd& sigma, double rel_tol) {
    if (sigma.size() == 0) return 0;
    Index r = 0;
    while (r < sigma.size() && sigma[r] >= rel_tol * sigma[0]) ++r;
    return r;
}

namespace detail {

inline void reorthogonalize(const Eigen::MatrixXd& basis, Index count, Eigen::VectorXd& r) {
    if (count == 0) return;
    auto b = basis.leftCols(count);
    r.noalias() -= b * (b.transpose() * r); // classical Gram-Schmidt, twice
    r.noalias() -= b * (b.transpose() * r);
}

struct SmallSvd {
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u;
    Eigen::MatrixXd v;
};

inline SmallSvd small_svd(const Eigen::MatrixXd& b) {
    if (std::max(b.rows(), b.cols()) <= 200) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

} // namespace detail

/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization of both
/// bases and a deterministic seeded start vector. Uses only matvec/rmatvec and
/// never materializes the operator. Triple i is accepted once its residual
/// ||X^T u_i - sigma_i v_i|| <= tol * sigma_1 (the companion residual
/// ||X v_i - sigma_i u_i|| vanishes by construction of the bidiagonalization).
/// Returns min(k, numerical rank) triples; throws numerical_error with the
/// converged count if max_iter basis vectors do not suffice.
template <LinearOperator Op>
SvdTriples lanczos_svd(const Op& op, Index k, double tol = 1e-8, Index max_iter = -1,
                       std::uint64_t seed = 0x55A1C2ED17ull) {
    const Index m = op.rows();
    const Index n = op.cols();
    require(k >= 1, "truncated_svd: k must be >= 1");
    require(k < std::min(m, n), "truncated_svd: k must be < min(rows, cols)");
    require(tol > 0.0, "truncated_svd: tol must be positive");
    if (max_iter < 0) max_iter = 10 * k;
    const Index jmax = std::min(max_iter, std::min(m, n));

    Eigen::MatrixXd ubasis(m, jmax);
    Eigen::MatrixXd vbasis(n, jmax + 1);
    std::vector<double> alphas, betas;
    alphas.reserve(static_cast<std::size_t>(jmax));
    betas.reserve(static_cast<std::size_t>(jmax));

    CounterRng rng(seed);
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng.uniform() - 0.5;
    v.normalize();
    vbasis.col(0) = v;

    const double breakdown_rel = 1e-13;
    double scale = 0.0;
    bool alpha_breakdown = false;
    bool beta_breakdown = false;

    for (Index j = 0; j < jmax; ++j) {
        Eigen::VectorXd r = op.matvec(vbasis.col(j));
        if (j > 0) r -= betas[static_cast<std::size_t>(j - 1)] * ubasis.col(j - 1);
        detail::reorthogonalize(ubasis, j, r);
        const double alpha = r.norm();
        scale = std::max(scale, alpha);
        if (scale == 0.0 || alpha <= breakdown_rel * scale) {
            alpha_breakdown = true;
            break;
        }
        alphas.push_back(alpha);
        ubasis.col(j) = r / alpha;

        Eigen::VectorXd w = op.rmatvec(ubasis.col(j));
        w -= alpha * vbasis.col(j);
        detail::reorthogonalize(vbasis, j + 1, w);
        const double beta = w.norm();
        scale = std::max(scale, beta);
        betas.push_back(beta);
        if (beta <= breakdown_rel * scale) {
            beta_breakdown = true;
            break;
        }
        vbasis.col(j + 1) = w / beta;

        // Periodic convergence probe on the leading k triples.
        const Index steps = j + 1;
        if (steps >= k && steps % std::max<Index>(4, k / 2) == 0 && steps < jmax) {
            Eigen::MatrixXd b = Eigen::MatrixXd::Zero(steps, steps);
            for (Index i = 0; i < steps; ++i) b(i, i) = alphas[static_cast<std::size_t>(i)];
            for (Index i = 0; i + 1 < steps; ++i) b(i, i + 1) = betas[static_cast<std::size_t>(i)];
            auto svd = detail::small_svd(b);
            const double dangling = betas[static_cast<std::size_t>(steps - 1)];
            Index converged = 0;
            for (Index i = 0; i < std::min(k, steps); ++i) {
                if (dangling * std::abs(svd.u(steps - 1, i)) <= tol * svd.sigma[0])
                    ++converged;
                else
                    break;
            }
            if (converged >= k) break;
        }
    }

    const Index steps = static_cast<Index>(alphas.size());
    if (steps == 0)
        return SvdTriples{Eigen::VectorXd(0), Eigen::MatrixXd(m, 0), Eigen::MatrixXd(n, 0)};

    // On an alpha-side breakdown the pair (U_s, V_{s+1}) spans an invariant
    // subspace and the dangling beta belongs in the projected matrix, which
    // becomes s x (s+1); the triples are then exact.
    const Index bcols = alpha_breakdown ? steps + 1 : steps;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(steps, bcols);
    for (Index i = 0; i < steps; ++i) b(i, i) = alphas[static_cast<std::size_t>(i)];
    for (Index i = 0; i + 1 < bcols && i < static_cast<Index>(betas.size()); ++i)
        b(i, i + 1) = betas[static_cast<std::size_t>(i)];
    auto svd = detail::small_svd(b);
    const double s1 = svd.sigma[0];
    if (s1 <= 0.0)
        return SvdTriples{Eigen::VectorXd(0), Eigen::MatrixXd(m, 0), Eigen::MatrixXd(n, 0)};

    const Index want = std::min(k, steps);
    Index converged = want;
    if (!alpha_breakdown) {
        const double dangling = betas[static_cast<std::size_t>(steps - 1)];
        converged = 0;
        for (Index i = 0; i < want; ++i) {
            if (dangling * std::abs(svd.u(steps - 1, i)) <= tol * s1)
                ++converged;
            else
                break;
        }
    }
    if (converged < want && !beta_breakdown && !alpha_breakdown && steps < std::min(m, n))
        throw numerical_error("truncated_svd: not converged after " + std::to_string(steps) +
                              " iterations (" + std::to_string(converged) + " of " +
                              std::to_string(want) + " triples converged)");
    const Index avail = (alpha_breakdown || beta_breakdown || steps >= std::min(m, n))
                            ? want
                            : std::min(converged, want);

    // Drop triples at the double-precision noise floor.
    Index r = 0;
    while (r < avail && svd.sigma[r] > 1e-14 * s1) ++r;

    SvdTriples out;
    out.sigma = svd.sigma.head(r);
    out.u.noalias() = ubasis.leftCols(steps) * svd.u.leftCols(r);
    out.v.noalias() = vbasis.leftCols(bcols) * svd.v.leftCols(r);
    return out;
}

/// Truncated SVD of the implicit HbH operator.
inline SvdTruncation truncated_svd(const HbhOperator& op, Index k, double tol = 1e-8,
                                   Index max_iter = -1) {
    SvdTriples t = lanczos_svd(op, k, tol, max_iter);
    return SvdTruncation{op.window(), std::move(t.sigma), std::move(t.u), std::move(t.v)};
}

/// Full SVD by a direct dense method; the reference for all Lanczos tests.
inline SvdTriples dense_svd_oracle(const Eigen::MatrixXd& m) {
    require(m.size() <= Index(1'000'000), "dense_svd_oracle: size guard exceeded (> 1e6 entries)");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return SvdTriples{svd.singularValues(), svd.matrixU(), svd.matrixV()};
}

} // namespace elssa
