#pragma once

#include "elssa/core.hpp"
#include "elssa/model.hpp"
#include "elssa/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace elssa {

/// Exact evaluation of one damped cosine on the integer grid; shares the
/// evaluation path of the parametric model.
inline Image2D gen_cosine2d(const SinusoidTerm& term, Index nx, Index ny) {
    ParametricModel2D m;
    m.terms.push_back(term);
    return evaluate_grid(m, nx, ny);
}

struct DefectSpec {
    double row = 0.0;
    double col = 0.0;
    double radius = 3.0;
    double depth = 0.15; // positive depth darkens
};

/// Ground-truth recipe for an EL-like image: low-frequency cosine trend, a
/// cell pattern of 3 harmonics with sawtooth-like decay (amplitudes 1, 0.3,
/// 0.1 of cell_amp), Gaussian defect blobs, and white noise.
struct ElSynthSpec {
    Index rows = 150;
    Index cols = 120;
    Axis cell_axis = Axis::row;
    double cell_period = 12.0; // px; cell_period * n_cells ~ extent
    double cell_amp = 0.35;
    double trend_base = 1.0;
    double trend_amp_r = 0.25; // along rows, ~1.3 cycles per extent
    double trend_amp_c = 0.15; // along cols, ~0.9 cycles per extent
    std::vector<DefectSpec> defects;
    double noise_sigma = 0.02;
    std::uint64_t seed = 1;

    double n_cells() const {
        const double extent = static_cast<double>(cell_axis == Axis::row ? rows : cols);
        return extent / cell_period;
    }
};

struct ElGroundTruth {
    Image2D image; // trend + cell + defects + noise, in that order
    Image2D trend;
    Image2D cell;
    Image2D defects;
    Image2D noise;
};

inline ElGroundTruth gen_el_like(const ElSynthSpec& spec) {
    require(spec.rows >= 2 && spec.cols >= 2, "gen_el_like: dims too small");
    require(spec.cell_period > 2.0, "gen_el_like: cell period must exceed 2 px");

    ParametricModel2D trend_model;
    trend_model.terms.push_back(SinusoidTerm{spec.trend_base, 1, 1, 0, 0, 0});
    trend_model.terms.push_back(
        SinusoidTerm{spec.trend_amp_r, 1, 1, 1.3 / static_cast<double>(spec.rows), 0, 0.4});
    trend_model.terms.push_back(
        SinusoidTerm{spec.trend_amp_c, 1, 1, 0, 0.9 / static_cast<double>(spec.cols), 1.1});

    const double f_cell = 1.0 / spec.cell_period;
    ParametricModel2D cell_model;
    const double harmonic_amp[3] = {1.0, 0.3, 0.1};
    for (int h = 1; h <= 3; ++h) {
        SinusoidTerm t;
        t.s = spec.cell_amp * harmonic_amp[h - 1];
        t.phi = normalize_phase(-std::numbers::pi / 2.0); // sawtooth-like sine phases
        (spec.cell_axis == Axis::row ? t.om_r : t.om_c) = h * f_cell;
        cell_model.terms.push_back(t);
    }

    ElGroundTruth out;
    out.trend = evaluate_grid(trend_model, spec.rows, spec.cols);
    out.cell = evaluate_grid(cell_model, spec.rows, spec.cols);
    out.defects = Image2D::Zero(spec.rows, spec.cols);
    for (const auto& d : spec.defects) {
        for (Index n = 0; n < spec.rows; ++n)
            for (Index m = 0; m < spec.cols; ++m) {
                const double dr = static_cast<double>(n) - d.row;
                const double dc = static_cast<double>(m) - d.col;
                out.defects(n, m) -=
                    d.depth * std::exp(-(dr * dr + dc * dc) / (2.0 * d.radius * d.radius));
            }
    }

    out.noise = Image2D::Zero(spec.rows, spec.cols);
    if (spec.noise_sigma > 0.0) {
        CounterRng rng = CounterRng(spec.seed).substream(0);
        for (Index n = 0; n < spec.rows; ++n)
            for (Index m = 0; m < spec.cols; ++m)
                out.noise(n, m) = spec.noise_sigma * rng.gaussian();
    }
    out.image = out.trend + out.cell + out.defects + out.noise;
    return out;
}

/// The stitch-accuracy simulation pair: x in {1, ..., n},
///   s1(x) = cos(2 pi x/50) + cos(2 pi x/20) + cos(2 pi x/30) + e1(x)
///   s2(x) = 2 cos(2 pi x/70) + cos(2 pi (x+shift)/20) + cos(2 pi (x+shift)/30) + e2(x)
/// with e1, e2 independent standard normal streams.
inline std::pair<Series1D, Series1D> gen_s1_s2(double shift, Index n, std::uint64_t seed) {
    require(n >= 100, "gen_s1_s2: n must be >= 100");
    Series1D s1(n), s2(n);
    CounterRng e1 = CounterRng(seed).substream(1);
    CounterRng e2 = CounterRng(seed).substream(2);
    const double two_pi = 2.0 * std::numbers::pi;
    for (Index i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1);
        s1[i] = std::cos(two_pi * x / 50.0) + std::cos(two_pi * x / 20.0) +
                std::cos(two_pi * x / 30.0) + e1.gaussian();
        s2[i] = 2.0 * std::cos(two_pi * x / 70.0) + std::cos(two_pi * (x + shift) / 20.0) +
                std::cos(two_pi * (x + shift) / 30.0) + e2.gaussian();
    }
    return {std::move(s1), std::move(s2)};
}

/// Intensity profile with a known inverse characteristic length: per cell of
/// width w, V(x) = V_edge * cosh(lambda0 (x - x_center)) / cosh(lambda0 w / 2)
/// solves V'' = lambda0^2 V exactly, and I = c exp(c0 V); tiled over n_cells
/// along the rows, constant along the columns.
inline Image2D gen_charlen_profile(double lambda0, Index cell_width, Index n_cells, double c,
                                   double c0, double v_edge, Index cols = 48) {
    require(lambda0 > 0.0, "gen_charlen_profile: lambda0 must be positive");
    require(cell_width >= 3 && n_cells >= 1, "gen_charlen_profile: bad cell geometry");
    require(c > 0.0 && c0 > 0.0, "gen_charlen_profile: c and c0 must be positive");

    const Index rows = cell_width * n_cells;
    const double norm = std::cosh(lambda0 * static_cast<double>(cell_width) / 2.0);
    Eigen::VectorXd profile(rows);
    for (Index n = 0; n < rows; ++n) {
        const Index cell = n / cell_width;
        const double center =
            static_cast<double>(cell * cell_width) + (static_cast<double>(cell_width) - 1.0) / 2.0;
        const double v = v_edge * std::cosh(lambda0 * (static_cast<double>(n) - center)) / norm;
        profile[n] = c * std::exp(c0 * v);
    }
    return profile.replicate(1, cols);
}

} // namespace elssa
