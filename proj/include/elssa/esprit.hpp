#pragma once

#include "elssa/core.hpp"
#include "elssa/hankel.hpp"
#include "elssa/model.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <vector>

namespace elssa {

/// Complex pole pair of one signal component. rho = |z| and om = arg(z)/(2*pi)
/// per axis; 1D estimates carry z_c = 1.
struct PoleEstimate {
    std::complex<double> z_r{1.0, 0.0};
    std::complex<double> z_c{1.0, 0.0};

    double rho_r() const { return std::abs(z_r); }
    double rho_c() const { return std::abs(z_c); }
    double om_r() const { return std::arg(z_r) / (2.0 * std::numbers::pi); }
    double om_c() const { return std::arg(z_c) / (2.0 * std::numbers::pi); }
};

namespace detail {

/// Least-squares F with up * F ~= down, via column-pivoted QR; throws on a
/// rank-deficient shift system.
inline Eigen::MatrixXd shift_solve(const Eigen::MatrixXd& up, const Eigen::MatrixXd& down) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(up);
    qr.setThreshold(1e-12);
    if (qr.rank() < up.cols())
        throw numerical_error("esprit: rank-deficient shift system");
    return qr.solve(down);
}

} // namespace detail

/// 1D ESPRIT: poles of a series from r left singular vectors of its trajectory
/// matrix (rows indexed by the window position). Solves the shift-invariance
/// least squares U_up * F = U_down; the eigenvalues of F are the poles.
inline std::vector<PoleEstimate> esprit_1d(const Eigen::MatrixXd& basis) {
    const Index l = basis.rows();
    const Index r = basis.cols();
    require(r >= 1, "esprit_1d: empty basis");
    require(l - 1 >= r, "esprit_1d: window too small for subspace size (L - 1 >= r required)");

    const Eigen::MatrixXd f =
        detail::shift_solve(basis.topRows(l - 1), basis.bottomRows(l - 1));
    Eigen::EigenSolver<Eigen::MatrixXd> eig(f);
    std::vector<PoleEstimate> poles(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) poles[static_cast<std::size_t>(i)].z_r = eig.eigenvalues()[i];
    return poles;
}

/// 2D ESPRIT on the left singular basis of an HbH operator (rows indexed
/// i_y * L_x + i_x). Two shift-invariance systems are solved: within-block row
/// shifts give F_r, block shifts give F_c. Pairing is intrinsic: the
/// eigenvectors W of F_r + gamma * F_c (approximately) diagonalize both, and
/// the per-axis poles are read off the diagonals of W^-1 F W.
inline std::vector<PoleEstimate> esprit_2d(const Eigen::MatrixXd& basis, const EmbeddingWindow& w,
                                           double cond_limit = 1e12) {
    const Index r = basis.cols();
    require(r >= 1, "esprit_2d: empty basis");
    require(basis.rows() == w.window_size(), "esprit_2d: basis rows != L_x * L_y");
    require(w.lx >= 2 && w.ly >= 2, "esprit_2d: both window sides must be >= 2");
    require((w.lx - 1) * w.ly >= r && (w.ly - 1) * w.lx >= r,
            "esprit_2d: shift systems must be overdetermined");

    Eigen::MatrixXd row_up((w.lx - 1) * w.ly, r), row_dn((w.lx - 1) * w.ly, r);
    for (Index iy = 0; iy < w.ly; ++iy) {
        row_up.middleRows(iy * (w.lx - 1), w.lx - 1) = basis.middleRows(iy * w.lx, w.lx - 1);
        row_dn.middleRows(iy * (w.lx - 1), w.lx - 1) = basis.middleRows(iy * w.lx + 1, w.lx - 1);
    }
    const Eigen::MatrixXd f_r = detail::shift_solve(row_up, row_dn);
    const Eigen::MatrixXd f_c = detail::shift_solve(basis.topRows((w.ly - 1) * w.lx),
                                                    basis.bottomRows((w.ly - 1) * w.lx));

    const double gamma = 0.5347169450598287;
    Eigen::EigenSolver<Eigen::MatrixXd> eig(f_r + gamma * f_c);
    const Eigen::MatrixXcd vecs = eig.eigenvectors();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vecs);
    const double smin = svd.singularValues()[r - 1];
    const double cond = smin > 0.0 ? svd.singularValues()[0] / smin
                                   : std::numeric_limits<double>::infinity();
    if (!(cond < cond_limit))
        throw numerical_error("esprit_2d: ill-conditioned joint eigenbasis (condition number " +
                              std::to_string(cond) + ")");

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(vecs);
    const Eigen::MatrixXcd dr = lu.solve(f_r.cast<std::complex<double>>() * vecs);
    const Eigen::MatrixXcd dc = lu.solve(f_c.cast<std::complex<double>>() * vecs);

    std::vector<PoleEstimate> poles(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) {
        poles[static_cast<std::size_t>(i)].z_r = dr(i, i);
        poles[static_cast<std::size_t>(i)].z_c = dc(i, i);
    }
    return poles;
}

/// Result of collapsing complex pole estimates into real cosine components.
struct MergedComponents {
    std::vector<ComponentDescriptor> components;
    std::vector<PoleEstimate> unpaired; // complex poles without a conjugate partner
};

namespace detail {

/// Canonical frequency sign: om_r > 0, or om_c >= 0 when om_r sits on {0, 1/2}
/// (where the sign is immaterial on the integer grid).
inline ComponentDescriptor canonical_component(const PoleEstimate& p) {
    ComponentDescriptor c{p.rho_r(), p.rho_c(), p.om_r(), p.om_c()};
    const bool r_on_lattice = std::abs(c.om_r) < 1e-13 || std::abs(std::abs(c.om_r) - 0.5) < 1e-13;
    const bool flip = r_on_lattice ? c.om_c < 0.0 : c.om_r < 0.0;
    if (flip) {
        c.om_r = -c.om_r;
        c.om_c = -c.om_c;
    }
    c.om_r = std::abs(c.om_r) < 1e-13 ? 0.0 : c.om_r;
    c.om_c = std::abs(c.om_c) < 1e-13 ? 0.0 : c.om_c;
    if (c.om_r == -0.5) c.om_r = 0.5;
    if (c.om_c == -0.5) c.om_c = 0.5;
    return c;
}

} // namespace detail

/// Merge conjugate pole pairs (within tol in pole space) into real components
/// with a canonical frequency sign; parameters of a pair are averaged. Real
/// poles map to om = 0 components. Unpaired complex poles are reported, not
/// converted.
inline MergedComponents merge_conjugates(const std::vector<PoleEstimate>& poles, double tol) {
    require(tol > 0.0, "merge_conjugates: tol must be positive");
    MergedComponents out;
    std::vector<bool> used(poles.size(), false);

    for (std::size_t i = 0; i < poles.size(); ++i) {
        if (used[i]) continue;
        const auto& p = poles[i];
        if (std::abs(p.z_r) < 1e-12 && std::abs(p.z_c) < 1e-12) {
            used[i] = true; // spurious nilpotent pole
            continue;
        }
        if (std::abs(p.z_r.imag()) <= tol && std::abs(p.z_c.imag()) <= tol) {
            used[i] = true;
            PoleEstimate realized = p;
            realized.z_r = {p.z_r.real(), 0.0};
            realized.z_c = {p.z_c.real(), 0.0};
            out.components.push_back(detail::canonical_component(realized));
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t match = i;
        for (std::size_t j = i + 1; j < poles.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(poles[j].z_r - std::conj(p.z_r)) +
                             std::abs(poles[j].z_c - std::conj(p.z_c));
            if (d < best) {
                best = d;
                match = j;
            }
        }
        if (match != i && best <= tol) {
            used[i] = used[match] = true;
            PoleEstimate merged;
            merged.z_r = (p.z_r + std::conj(poles[match].z_r)) / 2.0;
            merged.z_c = (p.z_c + std::conj(poles[match].z_c)) / 2.0;
            out.components.push_back(detail::canonical_component(merged));
        } else {
            used[i] = true;
            out.unpaired.push_back(p);
        }
    }
    return out;
}

/// Drop near-duplicate components (pole-space distance below tol), protecting
/// the downstream least squares from rank deficiency.
inline std::vector<ComponentDescriptor> dedupe_components(std::vector<ComponentDescriptor> cs,
                                                          double tol = 1e-7) {
    std::vector<ComponentDescriptor> out;
    for (const auto& c : cs) {
        bool dup = false;
        for (const auto& kept : out) {
            const double d = std::abs(c.rho_r - kept.rho_r) + std::abs(c.rho_c - kept.rho_c) +
                             std::abs(c.om_r - kept.om_r) + std::abs(c.om_c - kept.om_c);
            if (d < tol) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(c);
    }
    return out;
}

} // namespace elssa
