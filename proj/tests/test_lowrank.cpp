#include "elssa/lanczos.hpp"
#include "elssa/rng.hpp"
#include "elssa/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace elssa;

namespace {

Image2D separable_exponential(Index nx, Index ny, double a, double b) {
    Image2D img(nx, ny);
    for (Index n = 0; n < nx; ++n)
        for (Index m = 0; m < ny; ++m)
            img(n, m) = std::pow(a, static_cast<double>(n)) * std::pow(b, static_cast<double>(m));
    return img;
}

} // namespace

TEST_CASE("rank-1 separable exponential yields a single triple") {
    Image2D img = separable_exponential(10, 10, 0.9, 0.8);
    EmbeddingWindow w(5, 5, 10, 10);
    SvdTruncation t = truncated_svd(HbhOperator(img, w), 5);
    REQUIRE(t.rank() >= 1);
    CHECK(select_rank(t.sigma, 1e-9) == 1);

    auto oracle = dense_svd_oracle(dense_hbh(img, w));
    CHECK(t.sigma[0] == Catch::Approx(oracle.sigma[0]).epsilon(1e-8));
}

TEST_CASE("single 2D cosine has HbH rank 2") {
    SinusoidTerm term{1.0, 1.0, 1.0, 0.3, 0.2, 0.0};
    Image2D img = gen_cosine2d(term, 20, 20);
    EmbeddingWindow w(10, 10, 20, 20);
    SvdTruncation t = truncated_svd(HbhOperator(img, w), 5);
    CHECK(select_rank(t.sigma, 1e-9) == 2);

    auto oracle = dense_svd_oracle(dense_hbh(img, w));
    CHECK(select_rank(oracle.sigma, 1e-9) == 2);
    for (Index i = 0; i < 2; ++i)
        CHECK(t.sigma[i] == Catch::Approx(oracle.sigma[i]).epsilon(1e-8));
}

TEST_CASE("zero image yields zero triples") {
    SvdTruncation t = truncated_svd(HbhOperator(Image2D::Zero(8, 8), EmbeddingWindow(4, 4, 8, 8)), 3);
    CHECK(t.rank() == 0);
}

TEST_CASE("dense oracle basics") {
    auto id = dense_svd_oracle(Eigen::MatrixXd::Identity(3, 3));
    CHECK((id.sigma - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd d = Eigen::Vector3d(3.0, 2.0, 1.0).asDiagonal();
    auto ds = dense_svd_oracle(d);
    CHECK(ds.sigma[0] == Catch::Approx(3.0));
    CHECK(ds.sigma[1] == Catch::Approx(2.0));
    CHECK(ds.sigma[2] == Catch::Approx(1.0));
}

TEST_CASE("Frobenius identity on the 3x3 ramp trajectory matrix") {
    Image2D img(3, 3);
    img << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    auto svd = dense_svd_oracle(dense_hbh(img, EmbeddingWindow(2, 2, 3, 3)));
    CHECK(svd.sigma.squaredNorm() == Catch::Approx(480.0)); // sum of squared entries by hand
}

TEST_CASE("Lanczos matches the dense oracle on random images") {
    CounterRng rng(99);
    for (int rep = 0; rep < 3; ++rep) {
        Image2D img(40, 40);
        for (Index n = 0; n < 40; ++n)
            for (Index m = 0; m < 40; ++m) img(n, m) = rng.gaussian();
        EmbeddingWindow w(20, 20, 40, 40);
        SvdTruncation t = truncated_svd(HbhOperator(img, w), 10);
        auto oracle = dense_svd_oracle(dense_hbh(img, w));
        REQUIRE(t.rank() >= 10);
        for (Index i = 0; i < 10; ++i)
            CHECK(t.sigma[i] == Catch::Approx(oracle.sigma[i]).epsilon(1e-8));
    }
}

TEST_CASE("returned bases are orthonormal and satisfy sigma v = X^T u") {
    CounterRng rng(5);
    Image2D img(25, 30);
    for (Index n = 0; n < 25; ++n)
        for (Index m = 0; m < 30; ++m) img(n, m) = rng.gaussian();
    EmbeddingWindow w(12, 15, 25, 30);
    HbhOperator op(img, w);
    SvdTruncation t = truncated_svd(op, 8);
    REQUIRE(t.rank() >= 8);

    Eigen::MatrixXd gu = t.u.transpose() * t.u;
    Eigen::MatrixXd gv = t.v.transpose() * t.v;
    CHECK((gu - Eigen::MatrixXd::Identity(gu.rows(), gu.cols())).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((gv - Eigen::MatrixXd::Identity(gv.rows(), gv.cols())).cwiseAbs().maxCoeff() < 1e-8);

    for (Index i = 0; i < t.rank(); ++i) {
        Eigen::VectorXd resid = op.rmatvec(t.u.col(i)) - t.sigma[i] * t.v.col(i);
        CHECK(resid.norm() <= 1e-8 * t.sigma[0]);
    }

    // Parseval: partial energy is bounded by the full Frobenius norm.
    const double frob_sq = (pixel_weights(w).array() * img.array().square()).sum();
    CHECK(t.sigma.squaredNorm() <= frob_sq * (1.0 + 1e-12));
}

TEST_CASE("Parseval equality at full rank and finite-rank reconstruction") {
    SinusoidTerm term{2.0, 0.99, 1.0, 0.25, 0.1, 0.4};
    Image2D img = gen_cosine2d(term, 16, 14);
    EmbeddingWindow w(8, 7, 16, 14);
    SvdTruncation t = truncated_svd(HbhOperator(img, w), 6);

    const double frob_sq = (pixel_weights(w).array() * img.array().square()).sum();
    CHECK(t.sigma.squaredNorm() == Catch::Approx(frob_sq).epsilon(1e-10));

    std::vector<Index> all(static_cast<std::size_t>(t.rank()));
    for (Index i = 0; i < t.rank(); ++i) all[static_cast<std::size_t>(i)] = i;
    Image2D back = hankelize(t.terms(all), w);
    CHECK((back - img).cwiseAbs().maxCoeff() <= 1e-8 * img.cwiseAbs().maxCoeff());
}

TEST_CASE("non-convergence reports the converged count") {
    CounterRng rng(17);
    Image2D img(20, 20);
    for (Index n = 0; n < 20; ++n)
        for (Index m = 0; m < 20; ++m) img(n, m) = rng.gaussian();
    HbhOperator op(img, EmbeddingWindow(10, 10, 20, 20));
    try {
        truncated_svd(op, 8, 1e-10, 8); // far too few iterations
        FAIL("expected numerical_error");
    } catch (const numerical_error& e) {
        CHECK(std::string(e.what()).find("converged") != std::string::npos);
    }
}

TEST_CASE("k precondition") {
    Image2D img(3, 3);
    img << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    HbhOperator op(img, EmbeddingWindow(2, 2, 3, 3));
    CHECK_THROWS_AS(truncated_svd(op, 4), std::invalid_argument);
    CHECK_THROWS_AS(truncated_svd(op, 0), std::invalid_argument);
}
