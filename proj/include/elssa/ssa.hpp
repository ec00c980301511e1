#pragma once

#include "elssa/core.hpp"
#include "elssa/esprit.hpp"
#include "elssa/hankel.hpp"
#include "elssa/lanczos.hpp"
#include "elssa/model.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace elssa {

/// 2D-SSA of an image: embedding + truncated decomposition, ready for grouping
/// and diagonal-averaging reconstruction.
struct Ssa2dDecomposition {
    Image2D source;
    SvdTruncation truncation;

    const EmbeddingWindow& window() const { return truncation.window; }
    Index rank() const { return truncation.rank(); }
};

inline Ssa2dDecomposition decompose_2d(const Image2D& img, const EmbeddingWindow& w, Index k,
                                       double tol = 1e-8, Index max_iter = -1) {
    require(k >= 1, "decompose_2d: k must be >= 1");
    HbhOperator op(img, w);
    const Index kmax = std::min(op.rows(), op.cols()) - 1;
    SvdTruncation t = truncated_svd(op, std::min(k, std::max<Index>(kmax, 1)), tol, max_iter);
    return Ssa2dDecomposition{img, std::move(t)};
}

/// Default window: approximately half of the image dimensions.
inline Ssa2dDecomposition decompose_2d(const Image2D& img, Index k = 50, double tol = 1e-8,
                                       Index max_iter = -1) {
    return decompose_2d(img, EmbeddingWindow::half(img.rows(), img.cols()), k, tol, max_iter);
}

/// Diagonal-averaging reconstruction of the selected triples. Additive over
/// disjoint index sets.
inline Image2D reconstruct(const Ssa2dDecomposition& d, const std::vector<Index>& indices) {
    return hankelize(d.truncation.terms(indices), d.window());
}

inline Image2D reconstruct_all(const Ssa2dDecomposition& d) {
    std::vector<Index> all(static_cast<std::size_t>(d.rank()));
    for (Index i = 0; i < d.rank(); ++i) all[static_cast<std::size_t>(i)] = i;
    return reconstruct(d, all);
}

namespace detail {

/// A length-N series embedded as an N x 1 image with window (L, 1) is exactly
/// the 1D Hankel trajectory operator.
inline EmbeddingWindow series_window(Index n, Index l) {
    return EmbeddingWindow(l, 1, n, 1);
}

/// Horizontal concatenation [A : B] of two trajectory operators sharing the
/// row space; the MSSA stacked trajectory matrix.
struct StackedOperator {
    const HbhOperator* a;
    const HbhOperator* b;

    Index rows() const { return a->rows(); }
    Index cols() const { return a->cols() + b->cols(); }

    Eigen::VectorXd matvec(const Eigen::Ref<const Eigen::VectorXd>& v) const {
        return a->matvec(v.head(a->cols())) + b->matvec(v.tail(b->cols()));
    }

    Eigen::VectorXd rmatvec(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        Eigen::VectorXd out(cols());
        out.head(a->cols()) = a->rmatvec(u);
        out.tail(b->cols()) = b->rmatvec(u);
        return out;
    }
};

} // namespace detail

enum class Channel { first, second };

/// Multichannel SSA of a series pair: SVD of the stacked trajectory matrix
/// [H(a) : H(b)], L x 2(N - L + 1). The channels share the left singular
/// subspace; phases stay per-channel.
struct MssaDecomposition {
    Series1D a;
    Series1D b;
    Index window_l = 0;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u; // L x r, shared by both channels
    Eigen::MatrixXd v; // 2K x r

    Index rank() const { return sigma.size(); }
    Index series_length() const { return a.size(); }
    Index lag_count() const { return series_length() - window_l + 1; }

    /// Diagonal-averaged series of one channel from the leading r triples.
    Series1D reconstruct_channel(Channel channel, Index r = -1) const {
        if (r < 0) r = rank();
        require(r <= rank(), "reconstruct_channel: subspace size exceeds rank");
        const Index k = lag_count();
        const Index offset = channel == Channel::first ? 0 : k;
        std::vector<RankOneTerm> terms;
        terms.reserve(static_cast<std::size_t>(r));
        for (Index i = 0; i < r; ++i)
            terms.push_back(RankOneTerm{sigma[i], u.col(i), v.col(i).segment(offset, k)});
        return hankelize(terms, detail::series_window(series_length(), window_l)).col(0);
    }
};

inline MssaDecomposition decompose_mssa(const Series1D& a, const Series1D& b, Index l,
                                        Index k = 20, double tol = 1e-8, Index max_iter = -1) {
    require(a.size() == b.size(), "decompose_mssa: channel length mismatch");
    const Index n = a.size();
    require(n >= 3, "decompose_mssa: series too short");
    require(l >= 2 && l <= n - 1, "decompose_mssa: 2 <= L <= N - 1 violated");

    HbhOperator ha(Image2D(a), detail::series_window(n, l));
    HbhOperator hb(Image2D(b), detail::series_window(n, l));
    detail::StackedOperator stacked{&ha, &hb};
    const Index kmax = std::min(stacked.rows(), stacked.cols()) - 1;
    SvdTriples t = lanczos_svd(stacked, std::min(k, std::max<Index>(kmax, 1)), tol, max_iter);

    MssaDecomposition d;
    d.a = a;
    d.b = b;
    d.window_l = l;
    d.sigma = std::move(t.sigma);
    d.u = std::move(t.u);
    d.v = std::move(t.v);
    return d;
}

/// Per-channel amplitude/phase least squares against the shared component
/// frequencies; the regression target is the channel's reconstruction from the
/// leading `subspace` triples (all by default).
inline ParametricModel2D channel_model(const MssaDecomposition& d, Channel channel,
                                       const std::vector<ComponentDescriptor>& components,
                                       Index subspace = -1) {
    const Series1D series = d.reconstruct_channel(channel, subspace);
    Image2D target(series.size(), 1);
    target.col(0) = series;
    return fit_amplitude_phase(components, target);
}

} // namespace elssa
