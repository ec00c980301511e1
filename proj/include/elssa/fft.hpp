#pragma once

#include "elssa/core.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>

namespace elssa::detail {

/// Smallest 5-smooth integer >= n. Keeps mixed-radix transforms fast for any
/// image size.
inline Index next_fast_size(Index n) {
    if (n <= 2) return std::max<Index>(n, 1);
    for (Index candidate = n;; ++candidate) {
        Index rem = candidate;
        for (Index f : {2, 3, 5})
            while (rem % f == 0) rem /= f;
        if (rem == 1) return candidate;
    }
}

inline Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}

/// In-place 2D complex FFT (columns, then rows). The inverse carries the
/// 1/(rows*cols) normalization.
inline void fft2(Eigen::MatrixXcd& a, bool inverse) {
    auto& engine = fft_engine();
    if (a.rows() > 1) {
        Eigen::VectorXcd buf(a.rows()), out(a.rows());
        for (Index c = 0; c < a.cols(); ++c) {
            buf = a.col(c);
            if (inverse)
                engine.inv(out, buf);
            else
                engine.fwd(out, buf);
            a.col(c) = out;
        }
    }
    if (a.cols() > 1) {
        Eigen::VectorXcd rbuf(a.cols()), rout(a.cols());
        for (Index r = 0; r < a.rows(); ++r) {
            rbuf = a.row(r).transpose();
            if (inverse)
                engine.inv(rout, rbuf);
            else
                engine.fwd(rout, rbuf);
            a.row(r) = rout.transpose();
        }
    }
}

} // namespace elssa::detail
