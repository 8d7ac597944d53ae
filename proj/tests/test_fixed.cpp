#include <catch2/catch_amalgamated.hpp>

#include "intralayer/fixed.hpp"
#include "intralayer/rng.hpp"

using intralayer::ErrorCode;
using intralayer::Fixed;
using intralayer::SimError;

TEST_CASE("parse and print round-trip") {
    CHECK(Fixed::from_string("0").to_string() == "0");
    CHECK(Fixed::from_string("1").to_string() == "1");
    CHECK(Fixed::from_string("-2.5").to_string() == "-2.5");
    CHECK(Fixed::from_string("0.000000000000000001").to_string() == "0.000000000000000001");
    CHECK(Fixed::from_string("123.450000").to_string() == "123.45");
    CHECK(Fixed::from_string("+7.25") == Fixed::from_string("7.25"));
}

TEST_CASE("parse rejects malformed input") {
    CHECK_THROWS_AS(Fixed::from_string(""), SimError);
    CHECK_THROWS_AS(Fixed::from_string("abc"), SimError);
    CHECK_THROWS_AS(Fixed::from_string("1.2.3"), SimError);
    CHECK_THROWS_AS(Fixed::from_string("0.0000000000000000001"), SimError); // 19 digits
    CHECK_THROWS_AS(Fixed::from_string("."), SimError);
}

TEST_CASE("exact arithmetic") {
    Fixed a = Fixed::from_string("0.1");
    Fixed b = Fixed::from_string("0.2");
    CHECK((a + b) == Fixed::from_string("0.3"));
    CHECK((b - a) == a);
    CHECK((a * Fixed(3)) == Fixed::from_string("0.3"));
    CHECK((Fixed(1) / Fixed(8)) == Fixed::from_string("0.125"));
    CHECK((Fixed(7) * Fixed::from_string("0.003")) == Fixed::from_string("0.021"));
}

TEST_CASE("multiplication truncates toward zero") {
    Fixed tiny = Fixed::from_string("0.000000000000000001");
    // tiny * tiny = 1e-36, truncates to zero.
    CHECK((tiny * tiny).is_zero());
    CHECK((-tiny * tiny).is_zero());
}

TEST_CASE("mul_div applies a single rounding") {
    // 90 * 100 / 90 must be exactly 100 (share math relies on this).
    Fixed q = Fixed(90), s = Fixed(100), p = Fixed(90);
    CHECK(Fixed::mul_div(q, s, p) == Fixed(100));
    // Two-step rounding would lose: (1/3)*3 != 1 in 18 digits.
    Fixed third = Fixed(1) / Fixed(3);
    CHECK((third * Fixed(3)) != Fixed(1));
    CHECK(Fixed::mul_div(Fixed(1), Fixed(3), Fixed(3)) == Fixed(1));
}

TEST_CASE("from_double shortest round-trip") {
    CHECK(Fixed::from_double(1.0) == Fixed(1));
    CHECK(Fixed::from_double(0.25) == Fixed::from_string("0.25"));
    CHECK(Fixed::from_double(0.0).is_zero());
    double x = 1.1000000000000001; // not exactly representable; shortest repr is 1.1
    CHECK(Fixed::from_double(x) == Fixed::from_string("1.1"));
}

TEST_CASE("comparisons and sign helpers") {
    CHECK(Fixed(2) > Fixed(1));
    CHECK(Fixed(-1).is_negative());
    CHECK(Fixed(-1).abs() == Fixed(1));
    CHECK(Fixed().is_zero());
}

TEST_CASE("no wraparound at large magnitudes") {
    Fixed big = Fixed::from_string("1000000000000000000000000"); // 1e24 units
    Fixed prod = big * big;                                      // 1e48, still exact
    CHECK(prod.to_string() ==
          "1000000000000000000000000000000000000000000000000");
    CHECK(prod > big);
}

TEST_CASE("property: addition conserves under random split") {
    intralayer::Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        auto total = Fixed::from_raw(Fixed::Raw(rng.next_u64() >> 8));
        auto part = Fixed::from_raw(total.raw() == 0 ? Fixed::Raw(0)
                                                     : total.raw() / 3);
        CHECK((total - part) + part == total);
    }
}
