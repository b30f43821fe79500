#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <string>

#include <gmpxx.h>

#include "error.hpp"

namespace gdarboux {

using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

/// Parses "a", "-a", "a/b" or a finite decimal ("1.25", "3e-4") exactly.
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw Error("empty rational literal");
    if (text.find('/') != std::string::npos) {
        Rational r;
        if (r.set_str(text, 10) != 0 || r.get_den() == 0) throw Error("malformed rational '" + text + "'");
        r.canonicalize();
        return r;
    }
    std::size_t i = 0;
    bool neg = false;
    if (text[i] == '+' || text[i] == '-') {
        neg = text[i] == '-';
        ++i;
    }
    std::string digits;
    long scale = 0;
    bool seen_digit = false, seen_dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            seen_digit = true;
            if (seen_dot) ++scale;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!seen_digit) throw Error("malformed number '" + text + "'");
    long exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        std::size_t used = 0;
        try {
            exponent = std::stol(text.substr(i), &used);
        } catch (const std::exception&) {
            throw Error("malformed exponent in '" + text + "'");
        }
        i += used;
    }
    if (i != text.size()) throw Error("malformed number '" + text + "'");
    mpz_class num(digits, 10);
    long shift = exponent - scale;
    mpz_class pow10;
    mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    Rational r = shift >= 0 ? Rational(num * pow10) : Rational(num, pow10);
    r.canonicalize();
    return neg ? Rational(-r) : r;
}

/// Converts a double to the exact rational it denotes when that rational has a
/// short decimal expansion (e.g. 0.5, -1.25); throws for values like 1/3 or pi.
inline Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw Error("non-finite weight");
    char buf[64];
    for (int prec = 1; prec <= 15; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return parse_rational(buf);
    }
    throw Error("weight " + std::to_string(v) + " is not an exact short decimal; give it as a ratio string");
}

/// Best rational approximation with bounded denominator (continued fractions).
inline Rational rationalize(double v, long max_den = 1000) {
    if (!std::isfinite(v)) return Rational(0);
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double x = v;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(x);
        if (std::abs(a) > 1e12) break;
        long ai = static_cast<long>(a);
        long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1; h1 = h2; k0 = k1; k1 = k2;
        double frac = x - a;
        if (std::abs(frac) < 1e-12) break;
        x = 1.0 / frac;
    }
    if (k1 == 0) return Rational(0);
    return make_rational(h1, k1);
}

/// Scalar coefficient of a monomial: an exact rational, or a float once any
/// floating input has been mixed in.
class Coefficient {
public:
    Coefficient() : q_(0) {}
    Coefficient(long v) : q_(v) {}  // NOLINT(google-explicit-constructor)
    Coefficient(Rational q) : q_(std::move(q)) { q_.canonicalize(); }  // NOLINT
    static Coefficient from_double(double v) {
        Coefficient c;
        c.is_float_ = true;
        c.f_ = v;
        return c;
    }

    bool is_float() const noexcept { return is_float_; }
    const Rational& rational() const { return q_; }
    double to_double() const { return is_float_ ? f_ : q_.get_d(); }

    bool is_zero() const { return is_float_ ? f_ == 0.0 : sgn(q_) == 0; }
    bool is_one() const { return is_float_ ? f_ == 1.0 : q_ == 1; }
    int sign() const { return is_float_ ? (f_ > 0) - (f_ < 0) : sgn(q_); }

    Coefficient operator-() const {
        Coefficient c = *this;
        if (is_float_) c.f_ = -f_;
        else c.q_ = -q_;
        return c;
    }
    friend Coefficient operator+(const Coefficient& a, const Coefficient& b) {
        if (a.is_float_ || b.is_float_) return from_double(a.to_double() + b.to_double());
        return Coefficient(Rational(a.q_ + b.q_));
    }
    friend Coefficient operator-(const Coefficient& a, const Coefficient& b) { return a + (-b); }
    friend Coefficient operator*(const Coefficient& a, const Coefficient& b) {
        if (a.is_float_ || b.is_float_) return from_double(a.to_double() * b.to_double());
        return Coefficient(Rational(a.q_ * b.q_));
    }
    friend Coefficient operator/(const Coefficient& a, const Coefficient& b) {
        if (b.is_zero()) throw Error("division by zero coefficient");
        if (a.is_float_ || b.is_float_) return from_double(a.to_double() / b.to_double());
        return Coefficient(Rational(a.q_ / b.q_));
    }
    Coefficient& operator+=(const Coefficient& b) { return *this = *this + b; }
    Coefficient& operator*=(const Coefficient& b) { return *this = *this * b; }

    /// Total order used for canonical term ordering (exact before float).
    friend int compare(const Coefficient& a, const Coefficient& b) {
        if (a.is_float_ != b.is_float_) return a.is_float_ ? 1 : -1;
        if (a.is_float_) return (a.f_ > b.f_) - (a.f_ < b.f_);
        int c = cmp(a.q_, b.q_);
        return (c > 0) - (c < 0);
    }
    friend bool operator==(const Coefficient& a, const Coefficient& b) { return compare(a, b) == 0; }

    std::string str() const {
        if (!is_float_) return q_.get_str();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", f_);
        std::string s(buf);
        if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
        return s;
    }

private:
    Rational q_;
    double f_ = 0.0;
    bool is_float_ = false;
};

} // namespace gdarboux
