#pragma once

#include "elssa/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace elssa {

enum class Axis { row, col };

/// Wrap an angle into (-pi, pi].
inline double normalize_phase(double phi) {
    const double two_pi = 2.0 * std::numbers::pi;
    phi = std::fmod(phi, two_pi);
    if (phi <= -std::numbers::pi) phi += two_pi;
    if (phi > std::numbers::pi) phi -= two_pi;
    return phi;
}

/// One exponentially damped 2D cosine:
/// value(n, m) = s * rho_r^n * rho_c^m * cos(2*pi*(om_r*n + om_c*m) + phi).
struct SinusoidTerm {
    double s = 0.0;     // amplitude, >= 0
    double rho_r = 1.0; // damping per row step, > 0
    double rho_c = 1.0; // damping per column step, > 0
    double om_r = 0.0;  // cycles per row step, |om_r| <= 0.5
    double om_c = 0.0;  // cycles per column step, |om_c| <= 0.5
    double phi = 0.0;   // phase in (-pi, pi]

    double value(double n, double m) const {
        return s * std::pow(rho_r, n) * std::pow(rho_c, m) *
               std::cos(2.0 * std::numbers::pi * (om_r * n + om_c * m) + phi);
    }
};

/// Frequencies and dampings of one real component, as estimated by ESPRIT;
/// the amplitude and phase are left to the least-squares stage.
struct ComponentDescriptor {
    double rho_r = 1.0;
    double rho_c = 1.0;
    double om_r = 0.0;
    double om_c = 0.0;
};

/// Sum of damped-cosine terms; the class is closed under differentiation.
struct ParametricModel2D {
    std::vector<SinusoidTerm> terms;
    double fit_rmse = 0.0;

    bool empty() const { return terms.empty(); }
};

inline double evaluate_at(const ParametricModel2D& model, double n, double m) {
    double acc = 0.0;
    for (const auto& t : model.terms) acc += t.value(n, m);
    return acc;
}

/// Exact analytic evaluation on an arbitrary real mesh (sub-pixel allowed).
inline Eigen::VectorXd evaluate(const ParametricModel2D& model,
                                std::span<const std::pair<double, double>> mesh) {
    Eigen::VectorXd out(static_cast<Index>(mesh.size()));
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        require(std::isfinite(mesh[i].first) && std::isfinite(mesh[i].second),
                "evaluate: mesh coordinate not finite");
        out[static_cast<Index>(i)] = evaluate_at(model, mesh[i].first, mesh[i].second);
    }
    return out;
}

namespace detail {

// Per-axis factors of one term: a(n) = rho^n cos(2*pi*om*n + phase0),
// b(n) = rho^n sin(...). The term image is s*(a_r a_c^T - b_r b_c^T) by the
// cosine addition formula.
inline void axis_factors(Index extent, double rho, double om, double phase0, Eigen::VectorXd& a,
                         Eigen::VectorXd& b) {
    a.resize(extent);
    b.resize(extent);
    for (Index i = 0; i < extent; ++i) {
        const double d = std::pow(rho, static_cast<double>(i));
        const double ang = 2.0 * std::numbers::pi * om * static_cast<double>(i) + phase0;
        a[i] = d * std::cos(ang);
        b[i] = d * std::sin(ang);
    }
}

} // namespace detail

/// Evaluate on the integer grid [0, nx) x [0, ny).
inline Image2D evaluate_grid(const ParametricModel2D& model, Index nx, Index ny) {
    require(nx >= 1 && ny >= 1, "evaluate_grid: dims must be positive");
    Image2D out = Image2D::Zero(nx, ny);
    Eigen::VectorXd ar, br, ac, bc;
    for (const auto& t : model.terms) {
        detail::axis_factors(nx, t.rho_r, t.om_r, t.phi, ar, br);
        detail::axis_factors(ny, t.rho_c, t.om_c, 0.0, ac, bc);
        out.noalias() += t.s * (ar * ac.transpose());
        out.noalias() -= t.s * (br * bc.transpose());
    }
    return out;
}

/// Derivative along the continuous row or column coordinate. Each term maps to
/// one term: s' = s * sqrt(ln(rho)^2 + (2*pi*om)^2), phi' = phi +
/// atan2(2*pi*om, ln(rho)) with rho, om taken for the chosen axis.
inline ParametricModel2D differentiate(const ParametricModel2D& model, Axis axis) {
    ParametricModel2D out;
    out.terms.reserve(model.terms.size());
    for (const auto& t : model.terms) {
        require(t.rho_r > 0.0 && t.rho_c > 0.0, "differentiate: dampings must be positive");
        const double rho = axis == Axis::row ? t.rho_r : t.rho_c;
        const double om = axis == Axis::row ? t.om_r : t.om_c;
        const double lr = std::log(rho);
        const double omega = 2.0 * std::numbers::pi * om;
        SinusoidTerm d = t;
        d.s = t.s * std::hypot(lr, omega);
        d.phi = normalize_phase(t.phi + std::atan2(omega, lr));
        out.terms.push_back(d);
    }
    return out;
}

/// Sub-model of exactly the terms satisfying the predicate on
/// (om_r, om_c, rho_r, rho_c).
inline ParametricModel2D filter_terms(const ParametricModel2D& model,
                                      const std::function<bool(const SinusoidTerm&)>& keep) {
    ParametricModel2D out;
    out.fit_rmse = model.fit_rmse;
    for (const auto& t : model.terms)
        if (keep(t)) out.terms.push_back(t);
    return out;
}

namespace detail {

// sin(2*pi*(om_r*n + om_c*m)) vanishes identically on the integer grid iff
// both frequencies sit on {0, +-1/2}; the sine regressor is dropped there.
inline bool sine_vanishes_on_grid(double om_r, double om_c) {
    auto on_half_lattice = [](double om) {
        return std::abs(om) < 1e-12 || std::abs(std::abs(om) - 0.5) < 1e-12;
    };
    return on_half_lattice(om_r) && on_half_lattice(om_c);
}

inline void component_columns(const ComponentDescriptor& c, Index nx, Index ny,
                              Eigen::VectorXd& col_cos, Eigen::VectorXd& col_sin,
                              bool& has_sin) {
    Eigen::VectorXd ar, br, ac, bc;
    axis_factors(nx, c.rho_r, c.om_r, 0.0, ar, br);
    axis_factors(ny, c.rho_c, c.om_c, 0.0, ac, bc);
    Image2D img_cos = ar * ac.transpose() - br * bc.transpose();
    col_cos = Eigen::Map<Eigen::VectorXd>(img_cos.data(), img_cos.size());
    has_sin = !sine_vanishes_on_grid(c.om_r, c.om_c);
    if (has_sin) {
        Image2D img_sin = -(br * ac.transpose() + ar * bc.transpose());
        col_sin = Eigen::Map<Eigen::VectorXd>(img_sin.data(), img_sin.size());
    }
}

inline std::pair<Index, Index> closest_components(const std::vector<ComponentDescriptor>& cs) {
    Index bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < static_cast<Index>(cs.size()); ++i)
        for (Index j = i + 1; j < static_cast<Index>(cs.size()); ++j) {
            const auto &a = cs[static_cast<std::size_t>(i)], &b = cs[static_cast<std::size_t>(j)];
            const double d = std::abs(a.rho_r - b.rho_r) + std::abs(a.rho_c - b.rho_c) +
                             std::abs(a.om_r - b.om_r) + std::abs(a.om_c - b.om_c);
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    return {bi, bj};
}

} // namespace detail

/// Least-squares amplitudes and phases for fixed frequencies and dampings:
/// target(n, m) ~ sum_k A_k d_k(n, m) cos(theta_k) - B_k d_k(n, m) sin(theta_k)
/// with s_k = sqrt(A_k^2 + B_k^2) and phi_k = atan2(B_k, A_k). The target is
/// the SSA-reconstructed signal. Throws numerical_error on rank-deficient
/// regressors, naming the offending pair.
inline ParametricModel2D fit_amplitude_phase(const std::vector<ComponentDescriptor>& components,
                                             const Image2D& target) {
    require(!components.empty(), "fit_amplitude_phase: no components");
    const Index nx = target.rows();
    const Index ny = target.cols();
    const Index npix = nx * ny;

    std::vector<bool> has_sin(components.size());
    Index ncols = 0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto& c = components[i];
        require(c.rho_r > 0.0 && c.rho_c > 0.0, "fit_amplitude_phase: dampings must be positive");
        has_sin[i] = !detail::sine_vanishes_on_grid(c.om_r, c.om_c);
        ncols += has_sin[i] ? 2 : 1;
    }
    require(ncols <= npix, "fit_amplitude_phase: more regressors than pixels");

    Eigen::Map<const Eigen::VectorXd> y(target.data(), npix);
    Eigen::VectorXd coef;
    double resid_sq = 0.0;

    if (npix * ncols <= Index(40'000'000)) {
        Eigen::MatrixXd design(npix, ncols);
        Eigen::VectorXd col_cos, col_sin;
        bool hs = false;
        Index col = 0;
        for (const auto& c : components) {
            detail::component_columns(c, nx, ny, col_cos, col_sin, hs);
            design.col(col++) = col_cos;
            if (hs) design.col(col++) = col_sin;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < ncols) {
            auto [i, j] = detail::closest_components(components);
            throw numerical_error(
                "fit_amplitude_phase: rank-deficient regressors; closest pair is components " +
                std::to_string(i) + " and " + std::to_string(j));
        }
        coef = qr.solve(y);
        resid_sq = (y - design * coef).squaredNorm();
    } else {
        // Memory-bounded path: accumulate the normal equations over
        // image-column chunks (pixels of each chunk are contiguous in the
        // column-major flattening).
        const Index chunk = std::max<Index>(1, Index(4'000'000) / std::max<Index>(nx, 1));
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(ncols, ncols);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ncols);
        std::vector<Eigen::VectorXd> ar(components.size()), br(components.size()),
            ac(components.size()), bc(components.size());
        for (std::size_t i = 0; i < components.size(); ++i)
            detail::axis_factors(nx, components[i].rho_r, components[i].om_r, 0.0, ar[i], br[i]);
        for (std::size_t i = 0; i < components.size(); ++i)
            detail::axis_factors(ny, components[i].rho_c, components[i].om_c, 0.0, ac[i], bc[i]);

        auto fill_block = [&](Index m0, Index m1, Eigen::MatrixXd& block) {
            Index col = 0;
            for (std::size_t i = 0; i < components.size(); ++i) {
                const auto a_c = ac[i].segment(m0, m1 - m0);
                const auto b_c = bc[i].segment(m0, m1 - m0);
                Image2D img = ar[i] * a_c.transpose() - br[i] * b_c.transpose();
                block.col(col++) = Eigen::Map<Eigen::VectorXd>(img.data(), img.size());
                if (has_sin[i]) {
                    img = -(br[i] * a_c.transpose() + ar[i] * b_c.transpose());
                    block.col(col++) = Eigen::Map<Eigen::VectorXd>(img.data(), img.size());
                }
            }
        };

        Eigen::MatrixXd block;
        for (Index m0 = 0; m0 < ny; m0 += chunk) {
            const Index m1 = std::min(ny, m0 + chunk);
            block.resize(nx * (m1 - m0), ncols);
            fill_block(m0, m1, block);
            gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
            rhs.noalias() += block.transpose() * y.segment(m0 * nx, (m1 - m0) * nx);
        }
        gram = gram.selfadjointView<Eigen::Lower>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        const double lmax = eig.eigenvalues().maxCoeff();
        if (lmax <= 0.0 || eig.eigenvalues().minCoeff() < 1e-13 * lmax) {
            auto [i, j] = detail::closest_components(components);
            throw numerical_error(
                "fit_amplitude_phase: rank-deficient regressors; closest pair is components " +
                std::to_string(i) + " and " + std::to_string(j));
        }
        coef = eig.eigenvectors() *
               (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues());
        for (Index m0 = 0; m0 < ny; m0 += chunk) {
            const Index m1 = std::min(ny, m0 + chunk);
            block.resize(nx * (m1 - m0), ncols);
            fill_block(m0, m1, block);
            resid_sq += (y.segment(m0 * nx, (m1 - m0) * nx) - block * coef).squaredNorm();
        }
    }

    ParametricModel2D model;
    model.terms.reserve(components.size());
    Index col = 0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto& c = components[i];
        const double a = coef[col++];
        const double b = has_sin[i] ? coef[col++] : 0.0;
        SinusoidTerm t;
        t.rho_r = c.rho_r;
        t.rho_c = c.rho_c;
        t.om_r = c.om_r;
        t.om_c = c.om_c;
        t.s = std::hypot(a, b);
        t.phi = t.s > 0.0 ? normalize_phase(std::atan2(b, a)) : 0.0;
        model.terms.push_back(t);
    }
    model.fit_rmse = std::sqrt(resid_sq / static_cast<double>(npix));
    return model;
}

// ---------------------------------------------------------------------------
// Model document: lossless text interchange between CLI stages.
// ---------------------------------------------------------------------------

namespace detail {

inline void append_g17(std::string& out, double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

} // namespace detail

inline std::string model_to_string(const ParametricModel2D& model) {
    std::string out = "elssa-model 1\nfit_rmse ";
    detail::append_g17(out, model.fit_rmse);
    out += "\nterms " + std::to_string(model.terms.size()) + "\n";
    for (const auto& t : model.terms) {
        for (double v : {t.s, t.rho_r, t.rho_c, t.om_r, t.om_c, t.phi}) {
            detail::append_g17(out, v);
            out.push_back(' ');
        }
        out.back() = '\n';
    }
    return out;
}

inline ParametricModel2D model_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    require(in && tag == "elssa-model" && version == 1, "model document: bad header");
    ParametricModel2D model;
    std::size_t count = 0;
    in >> tag >> model.fit_rmse;
    require(in && tag == "fit_rmse", "model document: missing fit_rmse");
    in >> tag >> count;
    require(in && tag == "terms", "model document: missing terms count");
    for (std::size_t i = 0; i < count; ++i) {
        SinusoidTerm t;
        in >> t.s >> t.rho_r >> t.rho_c >> t.om_r >> t.om_c >> t.phi;
        require(static_cast<bool>(in), "model document: truncated term list");
        model.terms.push_back(t);
    }
    return model;
}

inline void save_model(const ParametricModel2D& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file for writing");
    const std::string text = model_to_string(model);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline ParametricModel2D load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    return model_from_string(ss.str());
}

} // namespace elssa
