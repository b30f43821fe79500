#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace gdarboux {

/// Element of the exterior algebra on q generators theta_0..theta_{q-1},
/// stored densely over the 2^q basis monomials (bit j set = theta_j present,
/// factors in increasing index order). T is double or an exact rational.
template <class T>
class Grassmann {
public:
    Grassmann() : q_(0), c_(1, T(0)) {}
    explicit Grassmann(unsigned q, T body = T(0)) : q_(q), c_(std::size_t{1} << q, T(0)) { c_[0] = body; }

    static Grassmann generator(unsigned q, unsigned j, T scale = T(1)) {
        Grassmann g(q);
        g.c_[std::size_t{1} << j] = scale;
        return g;
    }

    unsigned generators() const noexcept { return q_; }
    std::size_t size() const noexcept { return c_.size(); }
    const T& operator[](std::size_t mask) const { return c_[mask]; }
    T& operator[](std::size_t mask) { return c_[mask]; }
    const T& body() const { return c_[0]; }
    const std::vector<T>& coefficients() const noexcept { return c_; }

    /// Sign of theta_A * theta_B relative to theta_{A|B} (A, B disjoint).
    static int product_sign(std::uint64_t a, std::uint64_t b) {
        int swaps = 0;
        while (b) {
            unsigned j = static_cast<unsigned>(std::countr_zero(b));
            swaps += std::popcount(a >> (j + 1));
            b &= b - 1;
        }
        return swaps % 2 ? -1 : 1;
    }

    friend Grassmann operator+(Grassmann a, const Grassmann& b) {
        check(a, b);
        for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] += b.c_[i];
        return a;
    }
    friend Grassmann operator-(Grassmann a, const Grassmann& b) {
        check(a, b);
        for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] -= b.c_[i];
        return a;
    }
    Grassmann operator-() const {
        Grassmann r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }
    friend Grassmann operator*(const Grassmann& a, const Grassmann& b) {
        check(a, b);
        Grassmann r(a.q_);
        std::size_t n = a.c_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (a.c_[i] == T(0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if ((i & j) || b.c_[j] == T(0)) continue;
                T v = a.c_[i] * b.c_[j];
                if (product_sign(i, j) < 0) r.c_[i | j] -= v;
                else r.c_[i | j] += v;
            }
        }
        return r;
    }
    friend Grassmann operator*(const T& k, Grassmann a) {
        for (auto& v : a.c_) v *= k;
        return a;
    }
    Grassmann& operator+=(const Grassmann& b) { return *this = *this + b; }

    /// Nilpotent part (body removed).
    Grassmann soul() const {
        Grassmann r = *this;
        r.c_[0] = T(0);
        return r;
    }

    /// f(body + n) = sum_k f^(k)(body) n^k / k!, given derivs[k] = f^(k)(body).
    /// The series terminates because n^(q+1) = 0 (in fact n^(floor(q/2)+1) = 0
    /// for even elements, but odd pieces of mixed values need the full bound).
    Grassmann apply_series(const std::vector<T>& derivs) const {
        Grassmann n = soul();
        Grassmann r(q_, derivs.at(0));
        Grassmann power(q_, T(1));
        T factorial(1);
        for (unsigned k = 1; k < derivs.size() && k <= q_; ++k) {
            power = power * n;
            factorial *= T(static_cast<long>(k));
            bool zero = true;
            for (const auto& v : power.c_)
                if (v != T(0)) {
                    zero = false;
                    break;
                }
            if (zero) break;
            r += (derivs[k] / factorial) * power;
        }
        return r;
    }

    std::size_t derivative_count() const { return q_ + 1; }

private:
    static void check(const Grassmann& a, const Grassmann& b) {
        if (a.q_ != b.q_) throw Error("Grassmann values over different generator sets");
    }

    unsigned q_;
    std::vector<T> c_;
};

using GrassmannValue = Grassmann<double>;

inline double max_abs(const GrassmannValue& g) {
    double m = 0;
    for (double v : g.coefficients()) m = std::max(m, std::abs(v));
    return m;
}

} // namespace gdarboux
