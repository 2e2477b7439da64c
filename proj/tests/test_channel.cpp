#include <doctest.h>

#include <cstdio>

#include "rsma/channel.hpp"

using namespace rsma;

// Frozen off-diagonal entries for n_t=2, theta=pi/3, spread pi/18, computed
// with an independent 1e6-point quadrature implementation.
static constexpr double kR01StdRe = -0.895741514697583;
static constexpr double kR01StdIm = 0.415746211087648;
static constexpr double kR01PrnRe = 0.9454656283945923;
static constexpr double kR01PrnIm = 0.028723564435630154;

namespace {
OneRingParams desk_params(CovarianceVariant v, int n_t = 2) {
    OneRingParams p;
    p.n_t = n_t;
    p.theta = std::numbers::pi / 3.0;
    p.delta = std::numbers::pi / 18.0;
    p.variant = v;
    return p;
}
} // namespace

TEST_CASE("one-ring covariance matches the fine-quadrature oracle") {
    auto R = one_ring_covariance(desk_params(CovarianceVariant::standard));
    CHECK(std::abs(R(0, 1).real() - kR01StdRe) < 1e-9);
    CHECK(std::abs(R(0, 1).imag() - kR01StdIm) < 1e-9);

    auto Rp = one_ring_covariance(desk_params(CovarianceVariant::printed));
    CHECK(std::abs(Rp(0, 1).real() - kR01PrnRe) < 1e-9);
    CHECK(std::abs(Rp(0, 1).imag() - kR01PrnIm) < 1e-9);
}

TEST_CASE("covariance structure: unit diagonal, Hermitian, near-PSD") {
    for (auto v : {CovarianceVariant::standard, CovarianceVariant::printed}) {
        auto R = one_ring_covariance(desk_params(v, 4));
        for (int m = 0; m < 4; ++m) CHECK(R(m, m) == cplx(1.0, 0.0));
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) CHECK(R(m, n) == std::conj(R(n, m)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("doubling the quadrature changes entries by less than 1e-9") {
    for (auto v : {CovarianceVariant::standard, CovarianceVariant::printed}) {
        auto p = desk_params(v, 4);
        auto R1 = one_ring_covariance(p);
        p.quadrature_points *= 2;
        auto R2 = one_ring_covariance(p);
        CHECK((R1 - R2).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("KL factor reconstructs the covariance") {
    auto R = one_ring_covariance(desk_params(CovarianceVariant::standard, 4));
    auto f = kl_factor(R);
    CHECK((f.sqrt_cols * f.sqrt_cols.adjoint() - R).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(f.rank >= 1);
    CHECK(f.rank <= 4);
}

TEST_CASE("channel sampling is seed-deterministic with the right second moment") {
    auto R = one_ring_covariance(desk_params(CovarianceVariant::standard));
    auto f = kl_factor(R);
    std::vector<CovarianceFactor> factors(2, f);

    auto a = sample_channels(factors, 42);
    auto b = sample_channels(factors, 42);
    CHECK(a.h == b.h); // bit-identical
    CHECK(a.seed_record == 42);
    auto c = sample_channels(factors, 43);
    CHECK((a.h - c.h).cwiseAbs().maxCoeff() > 1e-6);
    // users draw from independent substreams
    CHECK((a.h.col(0) - a.h.col(1)).cwiseAbs().maxCoeff() > 1e-6);

    Eigen::MatrixXcd emp = Eigen::MatrixXcd::Zero(2, 2);
    const int n = 4000;
    for (int t = 0; t < n; ++t) {
        auto cr = sample_channels(factors, mix_seed(7, std::uint64_t(t)));
        emp += cr.h.col(0) * cr.h.col(0).adjoint();
    }
    emp /= double(n);
    CHECK((emp - R).cwiseAbs().maxCoeff() < 0.08); // ~3 sigma for 4000 draws
}

TEST_CASE("channel dump round-trips exactly") {
    auto R = one_ring_covariance(desk_params(CovarianceVariant::standard, 3));
    auto f = kl_factor(R);
    auto cr = sample_channels({f, f}, 123456789ull);
    const std::string path = "test_channel_dump.csv";
    dump_channels_csv(path, cr);
    auto back = load_channels_csv(path);
    CHECK(back.seed_record == cr.seed_record);
    REQUIRE(back.h.rows() == cr.h.rows());
    REQUIRE(back.h.cols() == cr.h.cols());
    CHECK(back.h == cr.h); // 17 significant digits round-trip doubles
    std::remove(path.c_str());
}
