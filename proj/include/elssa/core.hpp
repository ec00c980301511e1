#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace elssa {

using Index = Eigen::Index;

/// Dense real-valued raster. Element (n, m) is row n, column m; rows are
/// indexed along the first image axis throughout the library.
using Image2D = Eigen::MatrixXd;

/// Real-valued series of length >= 2.
using Series1D = Eigen::VectorXd;

/// Thrown when an algorithm fails numerically (non-convergence,
/// ill-conditioning, degenerate input). The CLI maps this to exit code 2.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    return m.allFinite();
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

} // namespace elssa
