// elssa: 2D-SSA decomposition toolkit for electroluminescence images of
// thin-film photovoltaic modules. Subcommands cover image decomposition,
// interconnection-line detection, inverse-characteristic-length estimation,
// stitch correction, synthetic data generation, pole estimation, and a
// scaling benchmark.

#include "elssa/elssa.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace elssa;
using nlohmann::json;

namespace {

constexpr double kElementaryCharge = 1.602176634e-19; // C
constexpr double kBoltzmann = 1.380649e-23;           // J/K

struct WindowArg {
    bool automatic = true;
    Index lx = 0, ly = 0;
};

WindowArg parse_window(const std::string& text) {
    WindowArg w;
    if (text == "auto") return w;
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw CLI::ValidationError("--window", "expected 'auto' or 'LXxLY', e.g. 75x60");
    try {
        w.lx = std::stol(text.substr(0, x));
        w.ly = std::stol(text.substr(x + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--window", "expected 'auto' or 'LXxLY', e.g. 75x60");
    }
    w.automatic = false;
    return w;
}

std::pair<double, double> parse_band(const std::string& text) {
    const auto sep = text.find(':');
    if (sep == std::string::npos)
        throw CLI::ValidationError("--cell-band", "expected 'LO:HI', e.g. 0.03:0.12");
    try {
        return {std::stod(text.substr(0, sep)), std::stod(text.substr(sep + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--cell-band", "expected 'LO:HI', e.g. 0.03:0.12");
    }
}

Axis parse_axis(const std::string& text, const std::string& flag) {
    if (text == "row") return Axis::row;
    if (text == "col") return Axis::col;
    throw CLI::ValidationError(flag, "expected 'row' or 'col'");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string term_table(const ParametricModel2D& m) {
    std::string t = "  idx          s        rho_r        rho_c         om_r         om_c          phi\n";
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
        const auto& x = m.terms[i];
        char line[200];
        std::snprintf(line, sizeof(line), "  %3zu %12.6g %12.8g %12.8g %12.8g %12.8g %12.6g\n", i,
                      x.s, x.rho_r, x.rho_c, x.om_r, x.om_c, x.phi);
        t += line;
    }
    return t;
}

json model_json(const ParametricModel2D& m) {
    json terms = json::array();
    for (const auto& t : m.terms)
        terms.push_back({{"s", t.s},
                         {"rho_r", t.rho_r},
                         {"rho_c", t.rho_c},
                         {"om_r", t.om_r},
                         {"om_c", t.om_c},
                         {"phi", t.phi}});
    return {{"fit_rmse", m.fit_rmse}, {"terms", terms}};
}

// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input, output = "out";
    std::string window = "auto";
    std::string cell_axis = "row";
    std::string mode = "additive";
    Index k = 50;
    Index n_cells = 150;
    double sigma_rel = 1e-4;
    bool png = false;
};

int run_decompose(const DecomposeArgs& a) {
    const Image2D x = load_image_auto(a.input);
    const Axis axis = parse_axis(a.cell_axis, "--cell-axis");
    const DecompositionMode mode = a.mode == "multiplicative"
                                       ? DecompositionMode::multiplicative
                                       : DecompositionMode::additive;
    ElDecomposeOptions opt;
    opt.k = a.k;
    opt.sigma_rel = a.sigma_rel;
    const WindowArg w = parse_window(a.window);
    if (!w.automatic) opt.window = EmbeddingWindow(w.lx, w.ly, x.rows(), x.cols());

    const ElDecomposition d = el_decompose(x, a.n_cells, axis, mode, opt);

    save_csv(d.g, a.output + "_G.csv");
    save_csv(d.s, a.output + "_S.csv");
    save_csv(d.r, a.output + "_R.csv");
    if (a.png) {
        save_image(d.g, a.output + "_G.png", ImageFormat::png16);
        save_image(d.s, a.output + "_S.png", ImageFormat::png16);
        save_image(d.r, a.output + "_R.png", ImageFormat::png16);
    }
    save_model(d.model_s, a.output + "_model_s.model");
    save_model(d.model_g, a.output + "_model_g.model");

    std::string report;
    report += "input: " + a.input + "\n";
    report += "dims: " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + "\n";
    report += "mode: " + a.mode + "\n";
    report += "cell_axis: " + a.cell_axis + "\n";
    report += "n_cells: " + std::to_string(a.n_cells) + "\n";
    report += "threshold_freq: " +
              format_g(static_cast<double>(a.n_cells) /
                       static_cast<double>(axis == Axis::row ? x.rows() : x.cols())) +
              "\n";
    report += "triples_computed: " + std::to_string(d.sigma.size()) + "\n";
    report += "subspace_used: " + std::to_string(d.subspace) + "\n";
    report += "fit_rmse: " + format_g(d.model_s.fit_rmse) + "\n";
    report += "energy fractions (sigma_i^2 / |X|_F^2, cumulative):\n";
    double cum = 0.0;
    Index cover999 = -1;
    for (Index i = 0; i < d.sigma.size(); ++i) {
        const double frac = d.sigma[i] * d.sigma[i] / d.frobenius_sq;
        cum += frac;
        if (cover999 < 0 && cum >= 0.999) cover999 = i + 1;
        char line[100];
        std::snprintf(line, sizeof(line), "  %3ld %12.6g %12.10g\n", static_cast<long>(i), frac,
                      cum);
        report += line;
    }
    report += "triples_for_999_energy: " +
              (cover999 > 0 ? std::to_string(cover999) : std::string("> computed")) + "\n";
    report += "cell model terms (S):\n" + term_table(d.model_s);
    report += "global model terms (G):\n" + term_table(d.model_g);
    write_text_file(a.output + "_report.txt", report);

    json j;
    j["input"] = a.input;
    j["rows"] = x.rows();
    j["cols"] = x.cols();
    j["mode"] = a.mode;
    j["n_cells"] = a.n_cells;
    j["subspace_used"] = d.subspace;
    j["fit_rmse"] = d.model_s.fit_rmse;
    j["sigma"] = std::vector<double>(d.sigma.data(), d.sigma.data() + d.sigma.size());
    j["frobenius_sq"] = d.frobenius_sq;
    j["model_s"] = model_json(d.model_s);
    j["model_g"] = model_json(d.model_g);
    write_text_file(a.output + "_report.json", j.dump(2) + "\n");

    std::cout << "decompose: wrote " << a.output << "_{G,S,R}.csv, models and reports\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string model, output = "out";
    Index rows = 0, cols = 0, refine = 4;
    std::string cell_axis = "row";
};

int run_detect_lines(const DetectArgs& a) {
    const ParametricModel2D model = load_model(a.model);
    const Axis axis = parse_axis(a.cell_axis, "--cell-axis");
    require(a.rows >= 2 && a.cols >= 2, "detect-lines: --rows and --cols are required");
    LineSet ls = detect_lines(model, a.rows, a.cols, a.refine, axis);
    if (ls.empty()) std::cerr << "detect-lines: no minima found\n";
    write_lineset_csv(ls, axis, a.output + "_lines.csv");
    std::cout << "detect-lines: " << ls.lines.size() << " lines -> " << a.output
              << "_lines.csv\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CharlenArgs {
    std::vector<std::string> models;
    std::string output = "out";
    Index rows = 0, cols = 0;
    double c = 1.0;
    double c0 = 0.0;
    double temperature = 0.0;
    double eps = 1e-3;
    std::string direction = "row";
};

int run_charlen(const CharlenArgs& a) {
    require(!a.models.empty(), "charlen: at least one --model is required");
    require(a.rows >= 1 && a.cols >= 1, "charlen: --rows and --cols are required");
    ParametricModel2D combined;
    for (const auto& path : a.models) {
        ParametricModel2D m = load_model(path);
        combined.terms.insert(combined.terms.end(), m.terms.begin(), m.terms.end());
    }
    double c0 = a.c0;
    if (a.temperature > 0.0) c0 = kElementaryCharge / (kBoltzmann * a.temperature);
    require(c0 > 0.0, "charlen: provide --c0 or --temperature");

    const CharLengthField f =
        char_length(combined, a.rows, a.cols, a.c, c0, parse_axis(a.direction, "--direction"),
                    a.eps);
    save_csv(f.lambda_sq, a.output + "_lambda_sq.csv");
    save_csv(f.lambda, a.output + "_lambda.csv");
    save_csv(f.mask, a.output + "_mask.csv");
    std::cout << "charlen: wrote " << a.output << "_{lambda_sq,lambda,mask}.csv (c0 = "
              << format_g(c0) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct UnstitchArgs {
    std::string input, output = "out";
    std::string slice_axis = "row";
    std::string cell_band;
    std::string rows_range;
    Index l = 0;
    Index k = 20;
    Index n_cells = 150;
    double sigma_rel = 0.1;
    std::string aggregate = "max";
    Index threads = 1;
    bool apply = false;
};

int run_unstitch(const UnstitchArgs& a) {
    const Image2D x = load_image_auto(a.input);
    const Axis axis = parse_axis(a.slice_axis, "--slice-axis");
    const Index length = axis == Axis::row ? x.cols() : x.rows();

    double f_lo, f_hi;
    if (!a.cell_band.empty()) {
        std::tie(f_lo, f_hi) = parse_band(a.cell_band);
    } else {
        // Band around the nominal cell frequency with a +-30% margin.
        const double nominal = static_cast<double>(a.n_cells) / static_cast<double>(length);
        f_lo = 0.7 * nominal;
        f_hi = std::min(0.49, 1.3 * nominal);
    }

    std::optional<std::pair<Index, Index>> range;
    if (!a.rows_range.empty()) {
        const auto sep = a.rows_range.find(':');
        if (sep == std::string::npos)
            throw CLI::ValidationError("--rows", "expected 'LO:HI' slice indices");
        range = std::make_pair<Index, Index>(std::stol(a.rows_range.substr(0, sep)),
                                             std::stol(a.rows_range.substr(sep + 1)));
    }

    StitchOptions opt;
    opt.k = a.k;
    opt.sigma_rel = a.sigma_rel;
    opt.threads = a.threads;
    opt.aggregate = a.aggregate == "median" ? ShiftAggregate::median : ShiftAggregate::max;

    const Index l = a.l > 0 ? a.l : length / 2;
    const DisplacementMap map = stitch_displacement(x, axis, l, f_lo, f_hi, range, opt);
    write_displacement_csv(map, a.output + "_displacement.csv");

    Index flagged = 0;
    for (auto v : map.valid)
        if (!v) ++flagged;
    std::cout << "unstitch: band [" << format_g(f_lo) << ", " << format_g(f_hi) << "], L = " << l
              << ", " << flagged << " pairs without in-band components\n";

    if (a.apply) {
        DisplacementMap negated = map;
        negated.shifts = -map.shifts;
        save_csv(apply_displacement(x, negated), a.output + "_corrected.csv");
        std::cout << "unstitch: wrote " << a.output << "_corrected.csv\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string kind = "el";
    std::string output = "out";
    std::uint64_t seed = 1;
    Index rows = 150, cols = 120;
    double cell_period = 12.0;
    double cell_amp = 0.35;
    double noise = 0.02;
    double shift = 7.0;
    Index n = 1000;
    double lambda0 = 0.05;
    Index cell_width = 20;
    Index n_cells = 8;
    double c = 1.0, c0 = 38.68, v_edge = 0.03;
    double om_r = 0.05, om_c = 0.0, amp = 1.0, phi = 0.0, rho_r = 1.0, rho_c = 1.0;
};

int run_synth(const SynthArgs& a) {
    if (a.kind == "el") {
        ElSynthSpec spec;
        spec.rows = a.rows;
        spec.cols = a.cols;
        spec.cell_period = a.cell_period;
        spec.cell_amp = a.cell_amp;
        spec.noise_sigma = a.noise;
        spec.seed = a.seed;
        spec.defects.push_back({0.3 * static_cast<double>(a.rows),
                                0.6 * static_cast<double>(a.cols), 3.0, 0.15});
        spec.defects.push_back({0.7 * static_cast<double>(a.rows),
                                0.25 * static_cast<double>(a.cols), 4.0, 0.1});
        const ElGroundTruth t = gen_el_like(spec);
        save_csv(t.image, a.output + "_image.csv");
        save_csv(t.trend, a.output + "_trend.csv");
        save_csv(t.cell, a.output + "_cell.csv");
        save_csv(t.defects, a.output + "_defects.csv");
        save_csv(t.noise, a.output + "_noise.csv");
        std::cout << "synth el: wrote image + ground-truth sidecars to " << a.output << "_*\n";
    } else if (a.kind == "s1s2") {
        const auto [s1, s2] = gen_s1_s2(a.shift, a.n, a.seed);
        save_csv(Image2D(s1), a.output + "_s1.csv");
        save_csv(Image2D(s2), a.output + "_s2.csv");
        std::cout << "synth s1s2: wrote " << a.output << "_{s1,s2}.csv\n";
    } else if (a.kind == "charlen") {
        const Image2D img =
            gen_charlen_profile(a.lambda0, a.cell_width, a.n_cells, a.c, a.c0, a.v_edge, a.cols);
        save_csv(img, a.output + "_image.csv");
        std::cout << "synth charlen: lambda0 = " << format_g(a.lambda0) << " -> " << a.output
                  << "_image.csv\n";
    } else if (a.kind == "cosine") {
        const Image2D img =
            gen_cosine2d({a.amp, a.rho_r, a.rho_c, a.om_r, a.om_c, a.phi}, a.rows, a.cols);
        save_csv(img, a.output + "_image.csv");
        std::cout << "synth cosine: wrote " << a.output << "_image.csv\n";
    } else {
        throw CLI::ValidationError("--kind", "expected el, s1s2, charlen or cosine");
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EspritArgs {
    std::string input, output = "out";
    std::string window = "auto";
    Index k = 50;
    double sigma_rel = 1e-4;
};

int run_esprit(const EspritArgs& a) {
    const Image2D x = load_image_auto(a.input);
    const WindowArg warg = parse_window(a.window);
    const EmbeddingWindow w = warg.automatic
                                  ? EmbeddingWindow::half(x.rows(), x.cols())
                                  : EmbeddingWindow(warg.lx, warg.ly, x.rows(), x.cols());
    const Ssa2dDecomposition d = decompose_2d(x, w, a.k);
    const Index subspace = select_rank(d.truncation.sigma, a.sigma_rel);
    if (subspace == 0) throw numerical_error("esprit: no significant components");

    auto merged = merge_conjugates(esprit_2d(d.truncation.u.leftCols(subspace), w), 1e-2);
    const auto components = dedupe_components(std::move(merged.components));
    if (components.empty()) throw numerical_error("esprit: no real components");

    std::vector<Index> leading(static_cast<std::size_t>(subspace));
    for (Index i = 0; i < subspace; ++i) leading[static_cast<std::size_t>(i)] = i;
    const ParametricModel2D model = fit_amplitude_phase(components, reconstruct(d, leading));
    save_model(model, a.output + "_model.model");

    std::string report;
    report += "input: " + a.input + "\n";
    report += "window: " + std::to_string(w.lx) + "x" + std::to_string(w.ly) + "\n";
    report += "subspace: " + std::to_string(subspace) + "\n";
    report += "unpaired_poles: " + std::to_string(merged.unpaired.size()) + "\n";
    report += "fit_rmse: " + format_g(model.fit_rmse) + "\n";
    report += "terms:\n" + term_table(model);
    write_text_file(a.output + "_report.txt", report);
    std::cout << "esprit: " << model.terms.size() << " components -> " << a.output
              << "_{model.model,report.txt}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::vector<Index> sizes = {250, 500, 1000, 2000};
    Index k = 50;
    std::uint64_t seed = 7;
};

int run_bench(const BenchArgs& a) {
    std::cout << "size   seconds   est_peak_MB\n";
    std::vector<double> secs;
    for (Index size : a.sizes) {
        ElSynthSpec spec;
        spec.rows = size;
        spec.cols = size;
        spec.cell_period = std::max(6.0, static_cast<double>(size) / 25.0);
        spec.noise_sigma = 0.01;
        spec.seed = a.seed;
        const ElGroundTruth t = gen_el_like(spec);

        const auto t0 = std::chrono::steady_clock::now();
        const Ssa2dDecomposition d = decompose_2d(t.image, a.k);
        const auto t1 = std::chrono::steady_clock::now();
        const double sec = std::chrono::duration<double>(t1 - t0).count();
        secs.push_back(sec);

        const EmbeddingWindow& w = d.window();
        const double basis_mb = static_cast<double>(w.window_size() + w.lag_size()) *
                                static_cast<double>(10 * a.k) * 8.0 / 1e6;
        const double fft_mb = static_cast<double>(size * size) * 16.0 * 3.0 / 1e6;
        std::printf("%4ld %9.3f %13.1f\n", static_cast<long>(size), sec, basis_mb + fft_mb);
    }
    for (std::size_t i = 1; i < secs.size(); ++i) {
        const double ratio = secs[i] / std::max(secs[i - 1], 1e-9);
        const double size_ratio = static_cast<double>(a.sizes[i]) / a.sizes[i - 1];
        // Quadrupled pixels should cost clearly less than the dense-SVD x16.
        const bool ok = a.sizes[i - 1] < 250 || ratio < 3.0 * size_ratio * size_ratio;
        std::printf("growth %ld -> %ld: time x%.2f (%s)\n", static_cast<long>(a.sizes[i - 1]),
                    static_cast<long>(a.sizes[i]), ratio, ok ? "OK" : "SUSPECT");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D singular-spectrum-analysis toolkit for EL images of thin-film PV modules"};
    app.require_subcommand(1);

    DecomposeArgs dec;
    auto* cmd_dec = app.add_subcommand("decompose",
                                       "Split an EL image into global, cell and aperiodic parts");
    cmd_dec->add_option("--input", dec.input, "input image (csv or grayscale png)")->required();
    cmd_dec->add_option("--output,-o", dec.output, "output prefix");
    cmd_dec->add_option("--window", dec.window, "embedding window 'LXxLY' or 'auto'");
    cmd_dec->add_option("--k", dec.k, "eigentriples to compute");
    cmd_dec->add_option("--n-cells", dec.n_cells, "cells along the cell axis");
    cmd_dec->add_option("--cell-axis", dec.cell_axis, "row or col");
    cmd_dec->add_option("--mode", dec.mode, "additive or multiplicative");
    cmd_dec->add_option("--sigma-rel", dec.sigma_rel, "subspace cutoff relative to sigma_1");
    cmd_dec->add_flag("--png", dec.png, "also write png16 previews");

    DetectArgs det;
    auto* cmd_det = app.add_subcommand("detect-lines",
                                       "Locate interconnection lines from a cell model");
    cmd_det->add_option("--model", det.model, "cell model document (from decompose)")->required();
    cmd_det->add_option("--rows", det.rows, "image rows")->required();
    cmd_det->add_option("--cols", det.cols, "image cols")->required();
    cmd_det->add_option("--refine", det.refine, "mesh refinement factor");
    cmd_det->add_option("--cell-axis", det.cell_axis, "row or col");
    cmd_det->add_option("--output,-o", det.output, "output prefix");

    CharlenArgs chl;
    auto* cmd_chl = app.add_subcommand("charlen", "Inverse characteristic length field");
    cmd_chl->add_option("--model", chl.models, "model document(s); terms are concatenated")
        ->required();
    cmd_chl->add_option("--rows", chl.rows, "image rows")->required();
    cmd_chl->add_option("--cols", chl.cols, "image cols")->required();
    cmd_chl->add_option("--c", chl.c, "optical-system constant c");
    cmd_chl->add_option("--c0", chl.c0, "thermal voltage constant 1/V");
    cmd_chl->add_option("--temperature", chl.temperature, "module temperature in K (sets c0)");
    cmd_chl->add_option("--eps", chl.eps, "mask threshold on |ln(I/c)|");
    cmd_chl->add_option("--direction", chl.direction, "derivative axis: row or col");
    cmd_chl->add_option("--output,-o", chl.output, "output prefix");

    UnstitchArgs uns;
    auto* cmd_uns = app.add_subcommand("unstitch", "Estimate per-slice stitch displacements");
    cmd_uns->add_option("--input", uns.input, "input image")->required();
    cmd_uns->add_option("--output,-o", uns.output, "output prefix");
    cmd_uns->add_option("--slice-axis", uns.slice_axis, "row or col");
    cmd_uns->add_option("--L", uns.l, "MSSA window (default: half the slice length)");
    cmd_uns->add_option("--cell-band", uns.cell_band, "frequency band 'LO:HI'");
    cmd_uns->add_option("--n-cells", uns.n_cells, "cells along a slice (derives the band)");
    cmd_uns->add_option("--rows", uns.rows_range, "slice index range 'LO:HI'");
    cmd_uns->add_option("--k", uns.k, "MSSA eigentriples");
    cmd_uns->add_option("--sigma-rel", uns.sigma_rel, "subspace cutoff relative to sigma_1");
    cmd_uns->add_option("--aggregate", uns.aggregate, "max (Algorithm default) or median");
    cmd_uns->add_option("--threads", uns.threads, "worker threads over slice pairs");
    cmd_uns->add_flag("--apply", uns.apply, "write the corrected image");

    SynthArgs syn;
    auto* cmd_syn = app.add_subcommand("synth", "Generate synthetic inputs with ground truth");
    cmd_syn->add_option("--kind", syn.kind, "el, s1s2, charlen or cosine");
    cmd_syn->add_option("--output,-o", syn.output, "output prefix");
    cmd_syn->add_option("--seed", syn.seed, "random seed");
    cmd_syn->add_option("--rows", syn.rows, "rows");
    cmd_syn->add_option("--cols", syn.cols, "cols");
    cmd_syn->add_option("--cell-period", syn.cell_period, "cell period in px (el)");
    cmd_syn->add_option("--cell-amp", syn.cell_amp, "cell amplitude (el)");
    cmd_syn->add_option("--noise", syn.noise, "noise sigma (el)");
    cmd_syn->add_option("--shift", syn.shift, "signal shift (s1s2)");
    cmd_syn->add_option("--n", syn.n, "series length (s1s2)");
    cmd_syn->add_option("--lambda0", syn.lambda0, "inverse characteristic length (charlen)");
    cmd_syn->add_option("--cell-width", syn.cell_width, "cell width px (charlen)");
    cmd_syn->add_option("--n-cells", syn.n_cells, "cell count (charlen)");
    cmd_syn->add_option("--c", syn.c, "optical constant (charlen)");
    cmd_syn->add_option("--c0", syn.c0, "thermal voltage constant (charlen)");
    cmd_syn->add_option("--v-edge", syn.v_edge, "edge voltage (charlen)");
    cmd_syn->add_option("--om-r", syn.om_r, "row frequency (cosine)");
    cmd_syn->add_option("--om-c", syn.om_c, "col frequency (cosine)");
    cmd_syn->add_option("--amp", syn.amp, "amplitude (cosine)");
    cmd_syn->add_option("--phi", syn.phi, "phase (cosine)");
    cmd_syn->add_option("--rho-r", syn.rho_r, "row damping (cosine)");
    cmd_syn->add_option("--rho-c", syn.rho_c, "col damping (cosine)");

    EspritArgs esp;
    auto* cmd_esp = app.add_subcommand("esprit", "Estimate poles and fit the parametric model");
    cmd_esp->add_option("--input", esp.input, "input image")->required();
    cmd_esp->add_option("--output,-o", esp.output, "output prefix");
    cmd_esp->add_option("--window", esp.window, "embedding window 'LXxLY' or 'auto'");
    cmd_esp->add_option("--k", esp.k, "eigentriples to compute");
    cmd_esp->add_option("--sigma-rel", esp.sigma_rel, "subspace cutoff relative to sigma_1");

    BenchArgs ben;
    auto* cmd_ben = app.add_subcommand("bench", "Decomposition timing over square sizes");
    cmd_ben->add_option("--sizes", ben.sizes, "square image sizes");
    cmd_ben->add_option("--k", ben.k, "eigentriples to compute");
    cmd_ben->add_option("--seed", ben.seed, "random seed");

    try {
        app.parse(argc, argv);
        if (*cmd_dec) return run_decompose(dec);
        if (*cmd_det) return run_detect_lines(det);
        if (*cmd_chl) return run_charlen(chl);
        if (*cmd_uns) return run_unstitch(uns);
        if (*cmd_syn) return run_synth(syn);
        if (*cmd_esp) return run_esprit(esp);
        if (*cmd_ben) return run_bench(ben);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
