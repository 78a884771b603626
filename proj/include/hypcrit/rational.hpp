#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hypcrit/errors.hpp"

namespace hypcrit {

/// Exact rational number with a positive denominator, always reduced.
/// Used for tree offsets and edge lengths so that tree distances are exact.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {} // NOLINT(implicit)
    Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Largest integer not exceeding the value.
    std::int64_t floor() const {
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return q;
    }
    Rational fractional() const { return *this - Rational(floor()); }
    bool is_integer() const { return den_ == 1; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                         static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                         static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw ArgumentError("rational division by zero");
        return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
    }
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend auto operator<=>(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
    }

    friend Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
    friend Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }
    friend Rational abs(const Rational& a) { return a.num_ < 0 ? -a : a; }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

    /// Best rational approximation with denominator at most max_den
    /// (continued-fraction convergents).
    static Rational approximate(double x, std::int64_t max_den = std::int64_t{1} << 20) {
        if (!std::isfinite(x)) throw ArgumentError("cannot approximate a non-finite value");
        std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double v = x;
        for (int it = 0; it < 64; ++it) {
            double a = std::floor(v);
            auto ai = static_cast<std::int64_t>(a);
            std::int64_t q2 = ai * q1 + q0;
            if (q2 > max_den) break;
            std::int64_t p2 = ai * p1 + p0;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            double r = v - a;
            if (r < 1e-15) break;
            v = 1.0 / r;
        }
        return Rational(p1, q1);
    }

    /// Parses "3", "-2/5" or a finite decimal literal such as "1.015625".
    static Rational parse(std::string_view s) {
        auto slash = s.find('/');
        if (slash != std::string_view::npos)
            return Rational(std::stoll(std::string(s.substr(0, slash))), std::stoll(std::string(s.substr(slash + 1))));
        auto dot = s.find('.');
        if (dot == std::string_view::npos) return Rational(std::stoll(std::string(s)));
        std::string digits = std::string(s.substr(0, dot)) + std::string(s.substr(dot + 1));
        std::int64_t den = 1;
        for (std::size_t i = dot + 1; i < s.size(); ++i) {
            if (den > std::int64_t{1} << 50) throw ArgumentError("decimal literal too long: " + std::string(s));
            den *= 10;
        }
        return Rational(std::stoll(digits), den);
    }

private:
    void assign(std::int64_t n, std::int64_t d) {
        if (d == 0) throw ArgumentError("rational with zero denominator");
        if (d < 0) { n = -n; d = -d; }
        std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        if (g == 0) g = 1;
        num_ = n / g;
        den_ = d / g;
    }
    static Rational from_wide(__int128 n, __int128 d) {
        if (d < 0) { n = -n; d = -d; }
        __int128 a = n < 0 ? -n : n, b = d;
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        if (a == 0) a = 1;
        n /= a;
        d /= a;
        constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
        if (n > lim || -n > lim || d > lim) throw Error("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace hypcrit
