#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "intralayer/errors.hpp"

namespace intralayer {

// Fixed-point decimal with 18 fractional digits. Ledger quantities, prices
// and fee amounts are carried in this type so that conservation identities
// hold exactly; floating point is reserved for derived metrics.
//
// Multiplication and division truncate toward zero after an exact
// arbitrary-precision intermediate, so a*b/c never double-rounds when
// computed through mul_div.
class Fixed {
public:
    using Raw = boost::multiprecision::cpp_int;

    static constexpr int kFractionalDigits = 18;

    Fixed() : raw_(0) {}
    Fixed(int v) : raw_(Raw(v) * scale()) {}
    Fixed(long v) : raw_(Raw(v) * scale()) {}
    Fixed(long long v) : raw_(Raw(v) * scale()) {}

    static const Raw& scale() {
        static const Raw s = [] {
            Raw r = 1;
            for (int i = 0; i < kFractionalDigits; ++i) r *= 10;
            return r;
        }();
        return s;
    }

    static Fixed from_raw(Raw raw) {
        Fixed f;
        f.raw_ = std::move(raw);
        return f;
    }

    // Exact parse of "[-]digits[.digits]"; more than 18 fractional digits
    // is rejected rather than silently rounded.
    static Fixed from_string(std::string_view s) {
        if (s.empty()) raise(ErrorCode::ParseError, "empty decimal");
        bool negative = false;
        size_t i = 0;
        if (s[0] == '-' || s[0] == '+') {
            negative = s[0] == '-';
            i = 1;
        }
        Raw int_part = 0;
        bool any_digit = false;
        for (; i < s.size() && s[i] != '.'; ++i) {
            if (s[i] < '0' || s[i] > '9')
                raise(ErrorCode::ParseError, "bad decimal '" + std::string(s) + "'");
            int_part = int_part * 10 + (s[i] - '0');
            any_digit = true;
        }
        Raw frac_part = 0;
        int frac_digits = 0;
        if (i < s.size() && s[i] == '.') {
            ++i;
            for (; i < s.size(); ++i) {
                if (s[i] < '0' || s[i] > '9')
                    raise(ErrorCode::ParseError, "bad decimal '" + std::string(s) + "'");
                if (frac_digits == kFractionalDigits)
                    raise(ErrorCode::ParseError,
                          "more than 18 fractional digits in '" + std::string(s) + "'");
                frac_part = frac_part * 10 + (s[i] - '0');
                ++frac_digits;
                any_digit = true;
            }
        }
        if (!any_digit) raise(ErrorCode::ParseError, "bad decimal '" + std::string(s) + "'");
        for (int d = frac_digits; d < kFractionalDigits; ++d) frac_part *= 10;
        Raw raw = int_part * scale() + frac_part;
        if (negative) raw = -raw;
        return from_raw(std::move(raw));
    }

    // Shortest round-trip print of the double, then exact parse. Keeps the
    // conversion deterministic without pulling binary exponents apart.
    static Fixed from_double(double v) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        if (res.ec != std::errc())
            raise(ErrorCode::ParseError, "unconvertible double");
        std::string_view sv(buf, static_cast<size_t>(res.ptr - buf));
        if (sv.find_first_of("eEnN") != std::string_view::npos) {
            // Scientific notation or nan/inf: go through a widened print.
            double av = v < 0 ? -v : v;
            if (!(av < 1e30))
                raise(ErrorCode::Overflow, "double out of fixed range");
            int n = snprintf(buf, sizeof(buf), "%.18f", v);
            sv = std::string_view(buf, static_cast<size_t>(n));
        }
        return from_string(sv);
    }

    const Raw& raw() const { return raw_; }

    bool is_zero() const { return raw_ == 0; }
    bool is_negative() const { return raw_ < 0; }

    Fixed operator-() const { return from_raw(-raw_); }
    Fixed abs() const { return raw_ < 0 ? -*this : *this; }

    Fixed operator+(const Fixed& o) const { return from_raw(raw_ + o.raw_); }
    Fixed operator-(const Fixed& o) const { return from_raw(raw_ - o.raw_); }
    Fixed& operator+=(const Fixed& o) { raw_ += o.raw_; return *this; }
    Fixed& operator-=(const Fixed& o) { raw_ -= o.raw_; return *this; }

    Fixed operator*(const Fixed& o) const {
        return from_raw(raw_ * o.raw_ / scale());
    }

    Fixed operator/(const Fixed& o) const {
        if (o.raw_ == 0) raise(ErrorCode::ParseError, "division by zero");
        return from_raw(raw_ * scale() / o.raw_);
    }

    // a*b/c with one truncation at the end.
    static Fixed mul_div(const Fixed& a, const Fixed& b, const Fixed& c) {
        if (c.raw_ == 0) raise(ErrorCode::ParseError, "division by zero");
        return from_raw(a.raw_ * b.raw_ / c.raw_);
    }

    auto operator<=>(const Fixed& o) const {
        if (raw_ < o.raw_) return std::strong_ordering::less;
        if (raw_ > o.raw_) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    bool operator==(const Fixed& o) const { return raw_ == o.raw_; }

    double to_double() const {
        return static_cast<double>(raw_.convert_to<long double>() /
                                   scale().convert_to<long double>());
    }

    // Canonical decimal string: no exponent, trailing fractional zeros trimmed.
    std::string to_string() const {
        Raw r = raw_;
        bool negative = r < 0;
        if (negative) r = -r;
        Raw ip = r / scale();
        Raw fp = r % scale();
        std::string out = negative ? "-" : "";
        out += ip.str();
        if (fp != 0) {
            std::string frac = fp.str();
            frac.insert(0, static_cast<size_t>(kFractionalDigits) - frac.size(), '0');
            while (!frac.empty() && frac.back() == '0') frac.pop_back();
            out += '.';
            out += frac;
        }
        return out;
    }

private:
    Raw raw_;
};

inline Fixed operator*(int a, const Fixed& b) { return Fixed(a) * b; }

// Semantic aliases. Quantities are non-negative and prices strictly positive;
// the operations that accept them enforce it.
using Quantity = Fixed;
using Price = Fixed;

inline void require_non_negative(const Fixed& q, const char* what) {
    if (q.is_negative()) raise(ErrorCode::NegativeQuantity, what);
}

inline void require_positive(const Fixed& p, const char* what) {
    if (p.is_negative() || p.is_zero()) raise(ErrorCode::ZeroPrice, what);
}

} // namespace intralayer
