#pragma once

#include "elssa/core.hpp"
#include "elssa/fft.hpp"

#include <utility>
#include <vector>

namespace elssa {

/// 2D-SSA embedding window (L_x, L_y) bound to image dimensions (N_x, N_y),
/// with the derived K_x = N_x - L_x + 1 and K_y = N_y - L_y + 1.
struct EmbeddingWindow {
    Index lx = 1;
    Index ly = 1;
    Index nx = 1;
    Index ny = 1;

    EmbeddingWindow() = default;
    EmbeddingWindow(Index lx_, Index ly_, Index nx_, Index ny_)
        : lx(lx_), ly(ly_), nx(nx_), ny(ny_) {
        require(lx >= 1 && lx <= nx, "window: 1 <= L_x <= N_x violated");
        require(ly >= 1 && ly <= ny, "window: 1 <= L_y <= N_y violated");
        require(lx * ly < nx * ny, "window: L_x*L_y < N_x*N_y violated");
    }

    /// Default choice per 2D-SSA practice: approximately half the dimensions.
    static EmbeddingWindow half(Index nx_, Index ny_) {
        return EmbeddingWindow((nx_ + 1) / 2, (ny_ + 1) / 2, nx_, ny_);
    }

    Index kx() const { return nx - lx + 1; }
    Index ky() const { return ny - ly + 1; }
    Index window_size() const { return lx * ly; }  // trajectory matrix rows
    Index lag_size() const { return kx() * ky(); } // trajectory matrix columns
};

/// Dense Hankel-block-Hankel trajectory matrix: L_y x K_y layout of blocks
/// X_{i_y + j_y}, each block L_x x K_x Hankel with entry x(i_x + j_x, c).
/// Test oracle; guarded against materializing anything large.
inline Eigen::MatrixXd dense_hbh(const Image2D& img, const EmbeddingWindow& w) {
    require(w.nx == img.rows() && w.ny == img.cols(), "dense_hbh: window/image dims mismatch");
    require(w.window_size() * w.lag_size() <= Index(10'000'000),
            "dense_hbh: size guard exceeded (> 1e7 entries)");
    Eigen::MatrixXd m(w.window_size(), w.lag_size());
    for (Index iy = 0; iy < w.ly; ++iy)
        for (Index ix = 0; ix < w.lx; ++ix)
            for (Index jy = 0; jy < w.ky(); ++jy)
                for (Index jx = 0; jx < w.kx(); ++jx)
                    m(iy * w.lx + ix, jy * w.kx() + jx) = img(ix + jx, iy + jy);
    return m;
}

/// Number of trajectory-matrix entries mapping to each pixel. Separable:
/// weight(n, m) = w1(n) * w2(m) with w1(n) = min(n+1, L_x, K_x, N_x - n).
inline Image2D pixel_weights(const EmbeddingWindow& w) {
    auto axis_weight = [](Index n, Index l, Index k, Index extent) {
        return static_cast<double>(std::min({n + 1, l, k, extent - n}));
    };
    Image2D weights(w.nx, w.ny);
    for (Index n = 0; n < w.nx; ++n)
        for (Index m = 0; m < w.ny; ++m)
            weights(n, m) = axis_weight(n, w.lx, w.kx(), w.nx) * axis_weight(m, w.ly, w.ky(), w.ny);
    return weights;
}

/// Implicit HbH trajectory operator. Stores one frequency-domain transform of
/// the padded source; matvec and rmatvec are 2D cross-correlations against the
/// reshaped input, O(N log N) per product with N = N_x * N_y. Immutable after
/// construction; concurrent products on one operator are safe.
class HbhOperator {
public:
    HbhOperator(Image2D img, const EmbeddingWindow& w)
        : img_(std::move(img)), w_(w),
          px_(detail::next_fast_size(w.nx)), py_(detail::next_fast_size(w.ny)) {
        require(w_.nx == img_.rows() && w_.ny == img_.cols(),
                "make_operator: window/image dims mismatch");
        require(w_.window_size() > 1, "make_operator: L_x*L_y > 1 violated");
        spectrum_ = Eigen::MatrixXcd::Zero(px_, py_);
        spectrum_.topLeftCorner(w_.nx, w_.ny) = img_.cast<std::complex<double>>();
        detail::fft2(spectrum_, false);
    }

    Index rows() const { return w_.window_size(); }
    Index cols() const { return w_.lag_size(); }
    const EmbeddingWindow& window() const { return w_; }
    const Image2D& source() const { return img_; }

    /// X * v; v indexed (j_y * K_x + j_x), result indexed (i_y * L_x + i_x).
    Eigen::VectorXd matvec(const Eigen::Ref<const Eigen::VectorXd>& v) const {
        require(v.size() == cols(), "matvec: length mismatch");
        return correlate(v, w_.kx(), w_.ky(), w_.lx, w_.ly);
    }

    /// X^T * u.
    Eigen::VectorXd rmatvec(const Eigen::Ref<const Eigen::VectorXd>& u) const {
        require(u.size() == rows(), "rmatvec: length mismatch");
        return correlate(u, w_.lx, w_.ly, w_.kx(), w_.ky());
    }

private:
    // out(t) = sum_s x(t + s) kernel(s): both products reduce to this with the
    // kernel and output swapping the (L, K) roles.
    Eigen::VectorXd correlate(const Eigen::Ref<const Eigen::VectorXd>& kernel, Index krows,
                              Index kcols, Index orows, Index ocols) const {
        Eigen::MatrixXcd work = Eigen::MatrixXcd::Zero(px_, py_);
        for (Index c = 0; c < kcols; ++c)
            for (Index r = 0; r < krows; ++r)
                work(r, c) = kernel[c * krows + r];
        detail::fft2(work, false);
        work = spectrum_.cwiseProduct(work.conjugate());
        detail::fft2(work, true);
        Eigen::VectorXd out(orows * ocols);
        for (Index c = 0; c < ocols; ++c)
            for (Index r = 0; r < orows; ++r)
                out[c * orows + r] = work(r, c).real();
        return out;
    }

    Image2D img_;
    EmbeddingWindow w_;
    Index px_, py_;
    Eigen::MatrixXcd spectrum_;
};

inline HbhOperator make_operator(Image2D img, const EmbeddingWindow& w) {
    return HbhOperator(std::move(img), w);
}

struct RankOneTerm {
    double sigma = 0.0;
    Eigen::VectorXd u; // length L_x * L_y
    Eigen::VectorXd v; // length K_x * K_y
};

/// Image whose HbH matrix is the orthogonal projection of sum(sigma * u * v^T)
/// onto HbH structure: each pixel averages all matrix entries mapping to it
/// (two-step diagonal averaging). Per rank-one term this is a full 2D
/// convolution of the reshaped u and v, done in the frequency domain, so the
/// dense product is never materialized; total cost O(k * N log N).
inline Image2D hankelize(const std::vector<RankOneTerm>& terms, const EmbeddingWindow& w) {
    const Index px = detail::next_fast_size(w.nx);
    const Index py = detail::next_fast_size(w.ny);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(px, py);
    for (const auto& t : terms) {
        require(t.u.size() == w.window_size() && t.v.size() == w.lag_size(),
                "hankelize: term dimension mismatch");
        Eigen::MatrixXcd fu = Eigen::MatrixXcd::Zero(px, py);
        Eigen::MatrixXcd fv = Eigen::MatrixXcd::Zero(px, py);
        for (Index c = 0; c < w.ly; ++c)
            for (Index r = 0; r < w.lx; ++r)
                fu(r, c) = t.u[c * w.lx + r];
        for (Index c = 0; c < w.ky(); ++c)
            for (Index r = 0; r < w.kx(); ++r)
                fv(r, c) = t.v[c * w.kx() + r];
        detail::fft2(fu, false);
        detail::fft2(fv, false);
        acc += t.sigma * fu.cwiseProduct(fv);
    }
    detail::fft2(acc, true);
    Image2D out = acc.topLeftCorner(w.nx, w.ny).real();
    out.array() /= pixel_weights(w).array();
    return out;
}

} // namespace elssa
