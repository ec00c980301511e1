#include "elssa/esprit.hpp"
#include "elssa/lanczos.hpp"
#include "elssa/rng.hpp"
#include "elssa/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>
#include <numbers>

using namespace elssa;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Eigen::MatrixXd series_basis(const Series1D& s, Index l, Index r) {
    auto svd = dense_svd_oracle(dense_hbh(Image2D(s), EmbeddingWindow(l, 1, s.size(), 1)));
    REQUIRE(svd.rank() >= r);
    return svd.u.leftCols(r);
}

Eigen::MatrixXd image_basis(const Image2D& img, const EmbeddingWindow& w, Index r,
                            Index k = -1) {
    if (k < 0) k = std::max<Index>(r + 2, 4);
    SvdTruncation t = truncated_svd(HbhOperator(img, w), k);
    REQUIRE(t.rank() >= r);
    return t.u.leftCols(r);
}

std::vector<ComponentDescriptor> sorted_by_freq(std::vector<ComponentDescriptor> cs) {
    std::sort(cs.begin(), cs.end(),
              [](const auto& a, const auto& b) { return a.om_r < b.om_r; });
    return cs;
}

} // namespace

TEST_CASE("1D ESPRIT on a pure cosine") {
    Series1D s(200);
    for (Index n = 0; n < 200; ++n) s[n] = std::cos(two_pi * n / 20.0);
    auto poles = esprit_1d(series_basis(s, 50, 2));
    REQUIRE(poles.size() == 2);
    std::sort(poles.begin(), poles.end(),
              [](const auto& a, const auto& b) { return a.om_r() < b.om_r(); });
    CHECK(poles[0].om_r() == Catch::Approx(-0.05).margin(1e-6));
    CHECK(poles[1].om_r() == Catch::Approx(0.05).margin(1e-6));
    CHECK(poles[0].rho_r() == Catch::Approx(1.0).margin(1e-6));
    CHECK(poles[1].rho_r() == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("1D ESPRIT on a damped exponential and a constant") {
    Series1D s(100);
    for (Index n = 0; n < 100; ++n) s[n] = std::pow(0.95, static_cast<double>(n));
    auto poles = esprit_1d(series_basis(s, 40, 1));
    REQUIRE(poles.size() == 1);
    CHECK(poles[0].z_r.real() == Catch::Approx(0.95).margin(1e-9));
    CHECK(std::abs(poles[0].z_r.imag()) < 1e-9);
    CHECK(poles[0].om_r() == Catch::Approx(0.0).margin(1e-9));

    Series1D c = Series1D::Constant(60, 3.0);
    auto cpoles = esprit_1d(series_basis(c, 20, 1));
    REQUIRE(cpoles.size() == 1);
    CHECK(cpoles[0].z_r.real() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("2D ESPRIT on a plane cosine") {
    Image2D img = gen_cosine2d({1.0, 1.0, 1.0, 0.3, 0.2, 0.0}, 30, 30);
    EmbeddingWindow w(15, 15, 30, 30);
    auto poles = esprit_2d(image_basis(img, w, 2), w);
    REQUIRE(poles.size() == 2);
    auto merged = merge_conjugates(poles, 1e-6);
    REQUIRE(merged.components.size() == 1);
    CHECK(merged.unpaired.empty());
    CHECK(merged.components[0].om_r == Catch::Approx(0.3).margin(1e-6));
    CHECK(merged.components[0].om_c == Catch::Approx(0.2).margin(1e-6));
    CHECK(merged.components[0].rho_r == Catch::Approx(1.0).margin(1e-6));
    CHECK(merged.components[0].rho_c == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("2D ESPRIT on a damped row cosine") {
    SinusoidTerm t{1.0, 0.98, 0.99, 0.1, 0.0, 0.0};
    Image2D img = gen_cosine2d(t, 40, 40);
    EmbeddingWindow w(20, 20, 40, 40);
    auto merged = merge_conjugates(esprit_2d(image_basis(img, w, 2), w), 1e-6);
    REQUIRE(merged.components.size() == 1);
    CHECK(merged.components[0].rho_r == Catch::Approx(0.98).margin(1e-6));
    CHECK(merged.components[0].rho_c == Catch::Approx(0.99).margin(1e-6));
    CHECK(merged.components[0].om_r == Catch::Approx(0.1).margin(1e-6));
    CHECK(merged.components[0].om_c == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("2D ESPRIT on a constant image") {
    Image2D img = Image2D::Constant(12, 12, 2.0);
    EmbeddingWindow w(6, 6, 12, 12);
    auto poles = esprit_2d(image_basis(img, w, 1), w);
    REQUIRE(poles.size() == 1);
    CHECK(std::abs(poles[0].z_r - std::complex<double>(1.0, 0.0)) < 1e-9);
    CHECK(std::abs(poles[0].z_c - std::complex<double>(1.0, 0.0)) < 1e-9);
}

TEST_CASE("merge_conjugates basics") {
    const std::complex<double> z = std::polar(1.0, two_pi * 0.05);

    auto pair = merge_conjugates({{z, {1, 0}}, {std::conj(z), {1, 0}}}, 1e-8);
    REQUIRE(pair.components.size() == 1);
    CHECK(pair.components[0].om_r == Catch::Approx(0.05));
    CHECK(pair.unpaired.empty());

    auto real_pole = merge_conjugates({{{0.95, 0.0}, {1, 0}}}, 1e-8);
    REQUIRE(real_pole.components.size() == 1);
    CHECK(real_pole.components[0].om_r == 0.0);
    CHECK(real_pole.components[0].rho_r == Catch::Approx(0.95));

    // Perturbed pair within tolerance merges with averaged parameters.
    PoleEstimate p1{z * 1.001, {1, 0}};
    PoleEstimate p2{std::conj(z) * 0.999, {1, 0}};
    REQUIRE(std::abs(p1.z_r - std::conj(p2.z_r)) == Catch::Approx(2e-3).epsilon(1e-6));
    auto perturbed = merge_conjugates({p1, p2}, 1e-2);
    REQUIRE(perturbed.components.size() == 1);
    const std::complex<double> avg = (p1.z_r + std::conj(p2.z_r)) / 2.0;
    CHECK(perturbed.components[0].rho_r == Catch::Approx(std::abs(avg)));
    CHECK(perturbed.components[0].om_r == Catch::Approx(std::arg(avg) / two_pi));

    // A lone complex pole is reported, not converted.
    auto lone = merge_conjugates({{z, {1, 0}}}, 1e-8);
    CHECK(lone.components.empty());
    REQUIRE(lone.unpaired.size() == 1);
}

TEST_CASE("noiseless recovery of up to 3 random 2D components") {
    CounterRng rng(314);
    for (int rep = 0; rep < 6; ++rep) {
        const int k = 1 + rep % 3;
        std::vector<SinusoidTerm> truth;
        while (static_cast<int>(truth.size()) < k) {
            SinusoidTerm t;
            t.s = 1.0;
            t.rho_r = 0.97 + 0.03 * rng.uniform();
            t.rho_c = 0.97 + 0.03 * rng.uniform();
            t.om_r = 0.02 + 0.43 * rng.uniform();
            t.om_c = 0.02 + 0.43 * rng.uniform();
            t.phi = normalize_phase((rng.uniform() - 0.5) * 6.0);
            bool separated = true;
            for (const auto& u : truth)
                if (std::abs(u.om_r - t.om_r) < 0.04) separated = false;
            if (separated) truth.push_back(t);
        }
        ParametricModel2D m;
        m.terms = truth;
        Image2D img = evaluate_grid(m, 60, 60);
        EmbeddingWindow w(30, 30, 60, 60);
        auto merged = merge_conjugates(esprit_2d(image_basis(img, w, 2 * k), w), 1e-6);
        REQUIRE(static_cast<int>(merged.components.size()) == k);

        auto got = sorted_by_freq(merged.components);
        std::sort(truth.begin(), truth.end(),
                  [](const auto& a, const auto& b) { return a.om_r < b.om_r; });
        for (int i = 0; i < k; ++i) {
            const auto& g = got[static_cast<std::size_t>(i)];
            const auto& t = truth[static_cast<std::size_t>(i)];
            CHECK(g.om_r == Catch::Approx(t.om_r).margin(1e-6));
            CHECK(g.om_c == Catch::Approx(t.om_c).margin(1e-6));
            CHECK(g.rho_r == Catch::Approx(t.rho_r).margin(1e-6));
            CHECK(g.rho_c == Catch::Approx(t.rho_c).margin(1e-6));
        }
    }
}

TEST_CASE("pairing never crosses frequencies of separated components") {
    ParametricModel2D m;
    m.terms.push_back({1.0, 1.0, 1.0, 0.3, 0.05, 0.2});
    m.terms.push_back({1.0, 1.0, 1.0, 0.1, 0.4, -0.4});
    Image2D img = evaluate_grid(m, 50, 50);
    EmbeddingWindow w(25, 25, 50, 50);
    auto got =
        sorted_by_freq(merge_conjugates(esprit_2d(image_basis(img, w, 4), w), 1e-6).components);
    REQUIRE(got.size() == 2);
    CHECK(got[0].om_r == Catch::Approx(0.1).margin(1e-6));
    CHECK(got[0].om_c == Catch::Approx(0.4).margin(1e-6));
    CHECK(got[1].om_r == Catch::Approx(0.3).margin(1e-6));
    CHECK(got[1].om_c == Catch::Approx(0.05).margin(1e-6));
}

TEST_CASE("noise robustness: median frequency error stays below 1e-3") {
    const double om_true = 0.23;
    std::vector<double> errors;
    for (int seed = 0; seed < 50; ++seed) {
        CounterRng rng(1000 + seed);
        Image2D img = gen_cosine2d({1.0, 1.0, 1.0, om_true, 0.11, 0.5}, 60, 60);
        for (Index n = 0; n < 60; ++n)
            for (Index m = 0; m < 60; ++m) img(n, m) += 0.1 * rng.gaussian();
        EmbeddingWindow w(30, 30, 60, 60);
        auto merged = merge_conjugates(esprit_2d(image_basis(img, w, 2, 2), w), 1e-2);
        REQUIRE(merged.components.size() == 1);
        errors.push_back(std::abs(merged.components[0].om_r - om_true));
    }
    std::sort(errors.begin(), errors.end());
    CHECK(errors[errors.size() / 2] <= 1e-3);
}

TEST_CASE("esprit input validation") {
    CHECK_THROWS_AS(esprit_1d(Eigen::MatrixXd::Zero(3, 3)), std::invalid_argument);
    Eigen::MatrixXd degenerate = Eigen::MatrixXd::Zero(8, 2); // rank-0 shift system
    CHECK_THROWS_AS(esprit_1d(degenerate), numerical_error);

    EmbeddingWindow w(4, 4, 8, 8);
    CHECK_THROWS_AS(esprit_2d(Eigen::MatrixXd::Identity(10, 2), w), std::invalid_argument);
    EmbeddingWindow tiny(1, 8, 8, 8);
    CHECK_THROWS_AS(esprit_2d(Eigen::MatrixXd::Identity(8, 2), tiny), std::invalid_argument);
}

TEST_CASE("dedupe_components drops near-duplicates") {
    std::vector<ComponentDescriptor> cs = {{1.0, 1.0, 0.1, 0.2},
                                           {1.0, 1.0, 0.1 + 1e-9, 0.2},
                                           {1.0, 1.0, 0.3, 0.2}};
    CHECK(dedupe_components(cs, 1e-7).size() == 2);
}
