#include <doctest.h>

#include "rsma/alphabet.hpp"

using namespace rsma;

namespace {
double mean_power(const Alphabet& a) {
    double s = 0.0;
    for (const auto& p : a.points) s += std::norm(p);
    return s / double(a.points.size());
}
} // namespace

TEST_CASE("constellations have unit mean power and stable sizes") {
    CHECK(make_constellation("null").size() == 1);
    CHECK(make_constellation("bpsk").size() == 2);
    CHECK(make_constellation("qpsk").size() == 4);
    CHECK(make_constellation("qam8").size() == 8);
    CHECK(make_constellation("qam16").size() == 16);
    for (const auto& name : {"bpsk", "qpsk", "qam8", "qam16"})
        CHECK(mean_power(make_constellation(name)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(make_constellation("null").points[0] == cplx(0.0, 0.0));
    CHECK(make_constellation("qam16").bits() == doctest::Approx(4.0));
    CHECK_THROWS_AS(make_constellation("psk8"), std::invalid_argument);
}

TEST_CASE("constellation point layout") {
    auto bpsk = make_constellation("bpsk");
    CHECK(bpsk.points[0] == cplx(-1.0, 0.0));
    CHECK(bpsk.points[1] == cplx(1.0, 0.0));

    auto qpsk = make_constellation("qpsk");
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(qpsk.points[0].real() == doctest::Approx(-r));
    CHECK(qpsk.points[0].imag() == doctest::Approx(-r));
    CHECK(qpsk.points[3].real() == doctest::Approx(r));
    CHECK(qpsk.points[3].imag() == doctest::Approx(r));

    // rectangular 8-point grid: four real levels, two imaginary levels
    auto qam8 = make_constellation("qam8");
    const double s8 = 1.0 / std::sqrt(6.0);
    CHECK(qam8.points[0] == cplx(-3.0 * s8, -1.0 * s8));
    CHECK(qam8.points[7] == cplx(3.0 * s8, 1.0 * s8));

    auto qam16 = make_constellation("qam16");
    const double s16 = 1.0 / std::sqrt(10.0);
    CHECK(qam16.points[0] == cplx(-3.0 * s16, -3.0 * s16));
    CHECK(qam16.points[15] == cplx(3.0 * s16, 3.0 * s16));
}

TEST_CASE("product alphabets enumerate row-major, first component slowest") {
    auto va = product_alphabet({make_constellation("bpsk"), make_constellation("qpsk")});
    CHECK(va.dims == 2);
    CHECK(va.count == 8);
    auto bpsk = make_constellation("bpsk");
    auto qpsk = make_constellation("qpsk");
    for (std::size_t v = 0; v < va.count; ++v) {
        CHECK(va.at(v, 0) == bpsk.points[v / 4]);
        CHECK(va.at(v, 1) == qpsk.points[v % 4]);
    }
}

TEST_CASE("empty product is the zero-dimensional identity") {
    auto va = product_alphabet({});
    CHECK(va.dims == 0);
    CHECK(va.count == 1);
}

TEST_CASE("mode tables match the complexity budget exactly") {
    auto m4 = modes_for_complexity(4);
    REQUIRE(m4.size() == 3);
    CHECK(m4[0].name() == "qpsk/null");
    CHECK(m4[1].name() == "bpsk/bpsk");
    CHECK(m4[2].name() == "null/qpsk");

    auto m16 = modes_for_complexity(16);
    REQUIRE(m16.size() == 5);
    CHECK(m16[0].name() == "qam16/null");
    CHECK(m16[1].name() == "qam8/bpsk");
    CHECK(m16[2].name() == "qpsk/qpsk");
    CHECK(m16[3].name() == "bpsk/qam8");
    CHECK(m16[4].name() == "null/qam16");

    for (const auto& m : m16) CHECK(m.complexity() == 16);
    for (int i = 0; i + 1 < int(m16.size()); ++i)
        CHECK(m16[i].private_alphabet.size() > m16[i + 1].private_alphabet.size());

    auto m2 = modes_for_complexity(2);
    REQUIRE(m2.size() == 2);
    CHECK(m2[0].name() == "bpsk/null");
    CHECK(m2[1].name() == "null/bpsk");

    CHECK_THROWS_AS(modes_for_complexity(3), std::invalid_argument);
    CHECK_THROWS_AS(modes_for_complexity(32), std::invalid_argument);
}

TEST_CASE("mode names round-trip") {
    auto m = parse_mode_name("qam8/bpsk");
    CHECK(m.name() == "qam8/bpsk");
    CHECK(m.complexity() == 16);
    CHECK_THROWS_AS(parse_mode_name("qam8"), std::invalid_argument);
    CHECK_THROWS_AS(parse_mode_name("qam8/psk3"), std::invalid_argument);
}
