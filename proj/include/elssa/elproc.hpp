#pragma once

#include "elssa/core.hpp"
#include "elssa/esprit.hpp"
#include "elssa/io.hpp"
#include "elssa/model.hpp"
#include "elssa/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace elssa {

enum class DecompositionMode { additive, multiplicative };

/// EL image split into global-intensity, cell, and aperiodic components with
/// G + S + R = X exactly (R is computed as the remainder). In multiplicative
/// mode the decomposition applies to ln(X) and all three components live in
/// the log domain.
struct ElDecomposition {
    Image2D g;
    Image2D s;
    Image2D r;
    ParametricModel2D model_s;
    ParametricModel2D model_g;
    bool log_domain = false;
    Eigen::VectorXd sigma;     // singular values of the truncation (diagnostic)
    Index subspace = 0;        // triples used for ESPRIT and the fit
    double frobenius_sq = 0.0; // squared Frobenius norm of the trajectory matrix
};

struct ElDecomposeOptions {
    Index k = 50;                    // eigentriples to compute
    double sigma_rel = 1e-4;         // subspace cutoff sigma_i >= sigma_rel * sigma_1
    double pair_tol = 1e-2;          // conjugate pairing tolerance in pole space
    double log_floor = 1e-6;         // clamp for the multiplicative mode logarithm
    std::optional<EmbeddingWindow> window; // default: half the image dims
};

/// EL image decomposition: 2D-SSA with k eigentriples, 2D-ESPRIT on the
/// leading subspace, amplitude/phase least squares against the reconstructed
/// low-rank signal, then grouping by the cell-frequency threshold
/// n_cells / N_axis: components with om_axis above it form S, the rest G, and
/// R := X - S - G.
inline ElDecomposition el_decompose(const Image2D& x, Index n_cells = 150,
                                    Axis cell_axis = Axis::row, DecompositionMode mode =
                                        DecompositionMode::additive,
                                    const ElDecomposeOptions& opt = {}) {
    require(n_cells >= 1, "el_decompose: n_cells must be >= 1");
    require(x.rows() >= 3 && x.cols() >= 3, "el_decompose: image too small");

    const Image2D work =
        mode == DecompositionMode::multiplicative ? log_transform(x, opt.log_floor) : x;

    ElDecomposition out;
    out.log_domain = mode == DecompositionMode::multiplicative;

    const EmbeddingWindow w =
        opt.window ? *opt.window : EmbeddingWindow::half(work.rows(), work.cols());
    Ssa2dDecomposition d = decompose_2d(work, w, opt.k);
    out.sigma = d.truncation.sigma;
    out.frobenius_sq = (pixel_weights(w).array() * work.array().square()).sum();

    const Index subspace = select_rank(d.truncation.sigma, opt.sigma_rel);
    out.subspace = subspace;
    if (subspace == 0) {
        out.g = Image2D::Zero(x.rows(), x.cols());
        out.s = Image2D::Zero(x.rows(), x.cols());
        out.r = work;
        return out;
    }

    const auto poles = esprit_2d(d.truncation.u.leftCols(subspace), w);
    auto merged = merge_conjugates(poles, opt.pair_tol);
    const auto components = dedupe_components(std::move(merged.components));
    if (components.empty())
        throw numerical_error("el_decompose: ESPRIT produced no real components");

    std::vector<Index> leading(static_cast<std::size_t>(subspace));
    for (Index i = 0; i < subspace; ++i) leading[static_cast<std::size_t>(i)] = i;
    const Image2D lowrank = reconstruct(d, leading);
    const ParametricModel2D fitted = fit_amplitude_phase(components, lowrank);

    const double n_axis =
        static_cast<double>(cell_axis == Axis::row ? work.rows() : work.cols());
    const double threshold = static_cast<double>(n_cells) / n_axis;
    auto freq_along = [cell_axis](const SinusoidTerm& t) {
        return std::abs(cell_axis == Axis::row ? t.om_r : t.om_c);
    };
    out.model_s = filter_terms(fitted, [&](const SinusoidTerm& t) {
        return freq_along(t) > threshold;
    });
    out.model_g = filter_terms(fitted, [&](const SinusoidTerm& t) {
        return !(freq_along(t) > threshold);
    });
    out.s = evaluate_grid(out.model_s, work.rows(), work.cols());
    out.g = evaluate_grid(out.model_g, work.rows(), work.cols());
    out.r = work - out.s - out.g;
    return out;
}

// ---------------------------------------------------------------------------
// Interconnection-line detection (sub-pixel minima of the cell model)
// ---------------------------------------------------------------------------

/// Polylines of sub-pixel (row, col) minima locations; one polyline per
/// interconnection line, one point per level along the line direction.
struct LineSet {
    std::vector<std::vector<std::pair<double, double>>> lines;

    bool empty() const { return lines.empty(); }
};

namespace detail {

inline double bisect_root(const ParametricModel2D& ds, Axis axis, double level, double lo,
                          double hi, double width_tol) {
    auto at = [&](double t) {
        return axis == Axis::row ? evaluate_at(ds, t, level) : evaluate_at(ds, level, t);
    };
    double flo = at(lo);
    for (int iter = 0; iter < 80 && hi - lo > width_tol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = at(mid);
        if ((flo < 0.0) == (fmid < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Locate the cell-model minima along cell_axis: the analytic derivative is
/// scanned on a mesh refined by `refine`, sign changes (- to +) are bisected
/// down to sub-pixel interval width, and per-level minima are chained into
/// polylines. Returns an empty set when the model has no minima.
inline LineSet detect_lines(const ParametricModel2D& model_s, Index nx, Index ny, Index refine = 4,
                            Axis cell_axis = Axis::row, double width_tol = 1e-9) {
    require(!model_s.empty(), "detect_lines: empty cell model");
    require(refine >= 1, "detect_lines: refine must be >= 1");
    require(nx >= 2 && ny >= 2, "detect_lines: dims too small");

    const ParametricModel2D ds = differentiate(model_s, cell_axis);
    const Index levels = cell_axis == Axis::row ? ny : nx;
    const Index extent = cell_axis == Axis::row ? nx : ny;

    double max_freq = 0.0;
    for (const auto& t : model_s.terms)
        if (t.s > 0.0)
            max_freq = std::max(max_freq, std::abs(cell_axis == Axis::row ? t.om_r : t.om_c));
    const double match_tol = max_freq > 0.0 ? std::max(0.75, 0.25 / max_freq) : 2.0;

    LineSet out;
    std::vector<Index> active; // polyline index per currently tracked line
    std::vector<double> last_pos;

    const double step = 1.0 / static_cast<double>(refine);
    for (Index level = 0; level < levels; ++level) {
        const double lv = static_cast<double>(level);
        std::vector<double> minima;
        double prev_t = 0.0;
        double prev_v = cell_axis == Axis::row ? evaluate_at(ds, 0.0, lv)
                                               : evaluate_at(ds, lv, 0.0);
        for (double t = step; t <= static_cast<double>(extent - 1) + 1e-12; t += step) {
            const double v =
                cell_axis == Axis::row ? evaluate_at(ds, t, lv) : evaluate_at(ds, lv, t);
            if (prev_v < 0.0 && v > 0.0)
                minima.push_back(detail::bisect_root(ds, cell_axis, lv, prev_t, t, width_tol));
            prev_t = t;
            prev_v = v;
        }

        // Greedy chain: match each minimum to the nearest active polyline.
        std::vector<Index> next_active;
        std::vector<double> next_pos;
        std::vector<bool> taken(active.size(), false);
        for (double pos : minima) {
            Index best = -1;
            double best_d = match_tol;
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (taken[i]) continue;
                const double dist = std::abs(last_pos[i] - pos);
                if (dist <= best_d) {
                    best_d = dist;
                    best = static_cast<Index>(i);
                }
            }
            Index line_idx;
            if (best >= 0) {
                taken[static_cast<std::size_t>(best)] = true;
                line_idx = active[static_cast<std::size_t>(best)];
            } else {
                line_idx = static_cast<Index>(out.lines.size());
                out.lines.emplace_back();
            }
            auto point = cell_axis == Axis::row ? std::make_pair(pos, lv) : std::make_pair(lv, pos);
            out.lines[static_cast<std::size_t>(line_idx)].push_back(point);
            next_active.push_back(line_idx);
            next_pos.push_back(pos);
        }
        active = std::move(next_active);
        last_pos = std::move(next_pos);
    }
    return out;
}

/// csv rows "line,level,coord": level runs along the line, coord is the
/// sub-pixel minimum position along cell_axis.
inline void write_lineset_csv(const LineSet& ls, Axis cell_axis, const std::string& path) {
    std::string out;
    for (std::size_t li = 0; li < ls.lines.size(); ++li) {
        for (const auto& [row, col] : ls.lines[li]) {
            out += std::to_string(li);
            out.push_back(',');
            detail::append_double(out, cell_axis == Axis::row ? col : row);
            out.push_back(',');
            detail::append_double(out, cell_axis == Axis::row ? row : col);
            out.push_back('\n');
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

// ---------------------------------------------------------------------------
// Inverse characteristic length (lambda^2 field)
// ---------------------------------------------------------------------------

/// lambda^2 = (I'' I - I'^2) / (I^2 ln(I/c)) evaluated from the analytic cell
/// model; the mask marks pixels where the formula is defined (I > 0 and
/// |ln(I/c)| >= eps, away from the I = c pole).
struct CharLengthField {
    Image2D lambda_sq;
    Image2D lambda; // sqrt(lambda_sq) where mask and lambda_sq >= 0, else 0
    Image2D mask;   // 1.0 valid, 0.0 masked
};

/// I_model is the smooth defect-free intensity (the G + S model); derivatives
/// are taken analytically along `direction`, never by pixel differences.
inline CharLengthField char_length(const ParametricModel2D& i_model, Index nx, Index ny, double c,
                                   double c0, Axis direction, double eps = 1e-3) {
    require(c > 0.0, "char_length: c must be positive");
    require(c0 > 0.0, "char_length: c0 must be positive");
    require(!i_model.empty(), "char_length: empty intensity model");

    const Image2D intensity = evaluate_grid(i_model, nx, ny);
    const ParametricModel2D d1 = differentiate(i_model, direction);
    const Image2D di = evaluate_grid(d1, nx, ny);
    const Image2D d2i = evaluate_grid(differentiate(d1, direction), nx, ny);

    CharLengthField out;
    out.lambda_sq = Image2D::Zero(nx, ny);
    out.lambda = Image2D::Zero(nx, ny);
    out.mask = Image2D::Zero(nx, ny);
    Index valid = 0;
    for (Index n = 0; n < nx; ++n) {
        for (Index m = 0; m < ny; ++m) {
            const double i_val = intensity(n, m);
            if (i_val <= 0.0) continue;
            const double log_ratio = std::log(i_val / c);
            if (std::abs(log_ratio) < eps) continue;
            out.mask(n, m) = 1.0;
            ++valid;
            const double num = d2i(n, m) * i_val - di(n, m) * di(n, m);
            const double lsq = num / (i_val * i_val * log_ratio);
            out.lambda_sq(n, m) = lsq;
            if (lsq >= 0.0) out.lambda(n, m) = std::sqrt(lsq);
        }
    }
    if (valid == 0) throw numerical_error("char_length: all pixels masked");
    return out;
}

// ---------------------------------------------------------------------------
// Stitch correction (Algorithm 3)
// ---------------------------------------------------------------------------

/// Per-slice relative sub-pixel shifts along the direction perpendicular to
/// slice_axis; entry i is the shift of slice i+1 with respect to slice i.
/// Entries without in-band components are 0 and marked invalid.
struct DisplacementMap {
    Eigen::VectorXd shifts;
    Axis slice_axis = Axis::row;
    std::vector<std::uint8_t> valid;
};

enum class ShiftAggregate { max, median };

struct StitchOptions {
    Index k = 20;             // MSSA eigentriples
    double sigma_rel = 0.1;   // subspace cutoff for the noisy-pair ESPRIT basis
    double pair_tol = 1e-2;   // conjugate pairing tolerance
    ShiftAggregate aggregate = ShiftAggregate::max; // Algorithm 3 uses max
    Index threads = 1;
};

/// Shift of channel b relative to channel a for one slice pair, from the
/// phase differences of the shared in-band components.
struct PairShift {
    std::vector<double> freqs;
    std::vector<double> shifts; // per in-band component, in (-T/2, T/2]
    double aggregated = 0.0;
    bool valid = false;
};

inline PairShift estimate_pair_shift(const Series1D& a, const Series1D& b, Index l, double f_lo,
                                     double f_hi, const StitchOptions& opt = {}) {
    require(0.0 < f_lo && f_lo < f_hi && f_hi < 0.5, "cell band must lie within (0, 0.5)");
    PairShift out;

    MssaDecomposition d = decompose_mssa(a, b, l, opt.k);
    const Index subspace = select_rank(d.sigma, opt.sigma_rel);
    if (subspace == 0) return out;
    if (l - 1 < subspace) throw numerical_error("estimate_pair_shift: window too small for rank");

    auto merged = merge_conjugates(esprit_1d(d.u.leftCols(subspace)), opt.pair_tol);
    const auto components = dedupe_components(std::move(merged.components));
    if (components.empty()) return out;

    std::vector<std::size_t> in_band;
    for (std::size_t i = 0; i < components.size(); ++i)
        if (components[i].om_r >= f_lo && components[i].om_r <= f_hi) in_band.push_back(i);
    if (in_band.empty()) return out;

    const ParametricModel2D ma = channel_model(d, Channel::first, components, subspace);
    const ParametricModel2D mb = channel_model(d, Channel::second, components, subspace);

    for (std::size_t i : in_band) {
        const double om = components[i].om_r;
        const double dphi = normalize_phase(mb.terms[i].phi - ma.terms[i].phi);
        out.freqs.push_back(om);
        out.shifts.push_back(dphi / (2.0 * std::numbers::pi * om));
    }
    out.valid = true;
    if (opt.aggregate == ShiftAggregate::max) {
        out.aggregated = *std::max_element(out.shifts.begin(), out.shifts.end());
    } else {
        std::vector<double> sorted = out.shifts;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t mid = sorted.size() / 2;
        out.aggregated = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    }
    return out;
}

/// Algorithm 3 over all adjacent slice pairs (optionally restricted to
/// [range_lo, range_hi] slice indices); pairs are independent and run on
/// opt.threads workers.
inline DisplacementMap stitch_displacement(const Image2D& x, Axis slice_axis, Index l,
                                           double f_lo, double f_hi,
                                           std::optional<std::pair<Index, Index>> range = {},
                                           const StitchOptions& opt = {}) {
    const Index slices = slice_axis == Axis::row ? x.rows() : x.cols();
    const Index length = slice_axis == Axis::row ? x.cols() : x.rows();
    require(slices >= 2, "stitch_displacement: need at least two slices");
    require(l >= 2 && l <= length - 1, "stitch_displacement: 2 <= L <= slice length - 1 violated");

    Index lo = 1, hi = slices - 1;
    if (range) {
        lo = std::max<Index>(1, range->first);
        hi = std::min<Index>(slices - 1, range->second);
        require(lo <= hi, "stitch_displacement: empty slice range");
    }

    DisplacementMap map;
    map.slice_axis = slice_axis;
    map.shifts = Eigen::VectorXd::Zero(slices - 1);
    map.valid.assign(static_cast<std::size_t>(slices - 1), 0);

    auto slice_of = [&](Index i) -> Series1D {
        return slice_axis == Axis::row ? Series1D(x.row(i).transpose()) : Series1D(x.col(i));
    };

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
            try {
                const PairShift ps = estimate_pair_shift(slice_of(i - 1), slice_of(i), l, f_lo,
                                                         f_hi, opt);
                map.shifts[i - 1] = ps.valid ? ps.aggregated : 0.0;
                map.valid[static_cast<std::size_t>(i - 1)] = ps.valid ? 1 : 0;
            } catch (...) {
                std::lock_guard<std::mutex> guard(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const Index nthreads = std::max<Index>(1, std::min<Index>(opt.threads, hi - lo + 1));
    if (nthreads == 1) {
        run(lo, hi + 1);
    } else {
        std::vector<std::thread> pool;
        const Index total = hi - lo + 1;
        const Index per = (total + nthreads - 1) / nthreads;
        for (Index t = 0; t < nthreads; ++t) {
            const Index begin = lo + t * per;
            const Index end = std::min<Index>(hi + 1, begin + per);
            if (begin >= end) break;
            pool.emplace_back(run, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return map;
}

/// Resample each slice along the perpendicular axis at the cumulative
/// displacement (anchored at 0 for the first slice) by linear interpolation;
/// out-of-range samples take the nearest edge value. Applying the negated
/// estimate of stitch_displacement aligns a misstitched image.
inline Image2D apply_displacement(const Image2D& x, const DisplacementMap& map) {
    const Index slices = map.slice_axis == Axis::row ? x.rows() : x.cols();
    const Index length = map.slice_axis == Axis::row ? x.cols() : x.rows();
    require(map.shifts.size() == slices - 1, "apply_displacement: map length != slices - 1");

    Image2D out(x.rows(), x.cols());
    double offset = 0.0;
    for (Index i = 0; i < slices; ++i) {
        if (i > 0) offset += map.shifts[i - 1];
        for (Index j = 0; j < length; ++j) {
            const double pos = std::clamp(static_cast<double>(j) + offset, 0.0,
                                          static_cast<double>(length - 1));
            const Index j0 = static_cast<Index>(std::floor(pos));
            const Index j1 = std::min(j0 + 1, length - 1);
            const double frac = pos - static_cast<double>(j0);
            const double v0 = map.slice_axis == Axis::row ? x(i, j0) : x(j0, i);
            const double v1 = map.slice_axis == Axis::row ? x(i, j1) : x(j1, i);
            const double v = (1.0 - frac) * v0 + frac * v1;
            if (map.slice_axis == Axis::row)
                out(i, j) = v;
            else
                out(j, i) = v;
        }
    }
    return out;
}

inline void write_displacement_csv(const DisplacementMap& map, const std::string& path) {
    std::string out;
    for (Index i = 0; i < map.shifts.size(); ++i) {
        detail::append_double(out, map.shifts[i]);
        out.push_back('\n');
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

} // namespace elssa
