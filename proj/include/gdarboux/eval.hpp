#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "expr.hpp"
#include "grassmann.hpp"

namespace gdarboux {

/// Numeric point of a chart. Even coordinates take the listed real values;
/// odd coordinate i is mapped to values[i] * theta_j, where j is its rank
/// among the odd coordinates (so distinct odd coordinates get distinct
/// generators). With body_only, odd coordinates evaluate to zero.
struct SamplePoint {
    std::vector<double> values;
    bool body_only = false;
};

template <class T>
inline T coefficient_as(const Coefficient& c);

template <>
inline double coefficient_as<double>(const Coefficient& c) { return c.to_double(); }

template <>
inline Rational coefficient_as<Rational>(const Coefficient& c) {
    if (c.is_float()) throw EvaluationError("floating coefficient in exact evaluation");
    return c.rational();
}

namespace detail {

inline std::vector<double> func_derivatives(Func f, double b, unsigned count) {
    std::vector<double> d(count);
    switch (f) {
    case Func::sin:
    case Func::cos: {
        double s = std::sin(b), c = std::cos(b);
        double cyc[4] = {s, c, -s, -c};
        int off = f == Func::sin ? 0 : 1;
        for (unsigned k = 0; k < count; ++k) d[k] = cyc[(k + off) % 4];
        break;
    }
    case Func::exp: {
        double e = std::exp(b);
        for (auto& v : d) v = e;
        break;
    }
    case Func::sinh:
    case Func::cosh: {
        double s = std::sinh(b), c = std::cosh(b);
        for (unsigned k = 0; k < count; ++k) d[k] = ((k + (f == Func::cosh)) % 2) ? c : s;
        break;
    }
    case Func::log: {
        if (!(b > 0)) throw EvaluationError("log of a nonpositive body");
        d[0] = std::log(b);
        double fact = 1;
        for (unsigned k = 1; k < count; ++k) {
            d[k] = ((k % 2) ? 1.0 : -1.0) * fact / std::pow(b, static_cast<double>(k));
            fact *= k;
        }
        break;
    }
    case Func::inv: {
        if (b == 0) throw EvaluationError("division by a zero body");
        double fact = 1;
        for (unsigned k = 0; k < count; ++k) {
            if (k) fact *= k;
            d[k] = ((k % 2) ? -1.0 : 1.0) * fact / std::pow(b, static_cast<double>(k + 1));
        }
        break;
    }
    }
    return d;
}

inline std::vector<Rational> func_derivatives(Func f, const Rational& b, unsigned count) {
    if (f != Func::inv) throw EvaluationError(std::string(func_name(f)) + " in exact evaluation");
    if (sgn(b) == 0) throw EvaluationError("division by a zero body");
    std::vector<Rational> d(count);
    Rational fact(1);
    Rational inv_b = Rational(1) / b;
    Rational p = inv_b;
    for (unsigned k = 0; k < count; ++k) {
        if (k) fact *= k;
        d[k] = ((k % 2) ? -1 : 1) * fact * p;
        p *= inv_b;
    }
    return d;
}

inline double int_power(double x, int e) {
    if (e < 0 && x == 0) throw EvaluationError("division by a zero body");
    return std::pow(x, e);
}

inline Rational int_power(const Rational& x, int e) {
    if (e < 0 && sgn(x) == 0) throw EvaluationError("division by a zero body");
    Rational base = e < 0 ? Rational(Rational(1) / x) : x;
    Rational r(1);
    for (int k = 0; k < std::abs(e); ++k) r *= base;
    return r;
}

} // namespace detail

/// Evaluates form-degree-0 expressions (or single components of forms) at one
/// point. Atom values are memoized per evaluator.
template <class T>
class Evaluator {
public:
    Evaluator(ChartPtr chart, const std::vector<T>& values, bool body_only = false)
        : chart_(std::move(chart)), values_(values), body_only_(body_only) {
        const Chart& c = *chart_;
        if (values_.size() != c.dim()) throw Error("sample point has the wrong dimension");
        q_ = body_only ? 0 : static_cast<unsigned>(c.odd_dim());
        unsigned j = 0;
        for (std::size_t i = 0; i < c.dim(); ++i) {
            if (c.parity(i).is_even()) {
                coords_.emplace_back(q_, values_[i]);
            } else {
                coords_.push_back(body_only ? Grassmann<T>(q_) : Grassmann<T>::generator(q_, j, values_[i]));
                ++j;
            }
        }
    }

    unsigned generators() const noexcept { return q_; }

    /// Value of one monomial times its coefficient; differentials are ignored.
    Grassmann<T> term(const Monomial& m, const Coefficient& c) {
        const Chart& ch = *chart_;
        T scalar = coefficient_as<T>(c);
        for (std::size_t i = 0; i < ch.dim(); ++i)
            if (m.x[i] != 0 && ch.parity(i).is_even()) scalar *= detail::int_power(values_[i], m.x[i]);
        Grassmann<T> r(q_, scalar);
        for (const auto& [atom, e] : m.atoms) r = r * atom_power(atom, e);
        for (std::size_t i = 0; i < ch.dim(); ++i)
            if (m.x[i] != 0 && ch.parity(i).is_odd()) r = r * coords_[i];
        return r;
    }

    Grassmann<T> function(const Expr& f) {
        if (!f.is_function()) throw ParityError("evaluation needs a form-degree-0 expression");
        Grassmann<T> r(q_);
        for (const auto& [m, c] : f.terms()) r += term(m, c);
        return r;
    }

    /// Component functions of a form keyed by differential pattern.
    std::map<std::vector<int>, Grassmann<T>> components(const Expr& form) {
        std::map<std::vector<int>, Grassmann<T>> out;
        for (const auto& [m, c] : form.terms()) {
            auto it = out.try_emplace(m.dx, q_).first;
            it->second += term(m, c);
        }
        return out;
    }

private:
    Grassmann<T> atom_power(const Atom& a, int e) {
        const Grassmann<T>& v = atom_value(a);
        Grassmann<T> base = v;
        if (e < 0) {
            base = v.apply_series(detail::func_derivatives(Func::inv, v.body(), q_ + 1));
            e = -e;
        }
        Grassmann<T> r(q_, T(1));
        for (int k = 0; k < e; ++k) r = r * base;
        return r;
    }

    const Grassmann<T>& atom_value(const Atom& a) {
        auto key = std::make_pair(static_cast<int>(a.func), a.arg.get());
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        Grassmann<T> arg = function(*a.arg);
        Grassmann<T> v = arg.apply_series(detail::func_derivatives(a.func, arg.body(), q_ + 1));
        return memo_.emplace(key, std::move(v)).first->second;
    }

    ChartPtr chart_;
    std::vector<T> values_;
    bool body_only_;
    unsigned q_ = 0;
    std::vector<Grassmann<T>> coords_;
    std::map<std::pair<int, const Expr*>, Grassmann<T>> memo_;
};

inline GrassmannValue eval_numeric(const Expr& f, const SamplePoint& p) {
    Evaluator<double> ev(f.chart(), p.values, p.body_only);
    return ev.function(f);
}

/// Real value of the body (odd coordinates set to zero).
inline double eval_body(const Expr& f, const std::vector<double>& values) {
    Evaluator<double> ev(f.chart(), values, true);
    return ev.function(f).body();
}

inline Rational eval_exact_body(const Expr& f, const std::vector<Rational>& values) {
    Evaluator<Rational> ev(f.chart(), values, true);
    return ev.function(f).body();
}

// -------------------------------------------------------------- sampling

/// Deterministic point sampler (explicit seed, no global state). Uses its own
/// uniform mapping so streams are identical across standard libraries.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) {
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    /// Even coordinates uniformly in the chart box; odd generator scales in
    /// [0.5, 1.5].
    SamplePoint draw(const Chart& c) {
        SamplePoint p;
        for (std::size_t i = 0; i < c.dim(); ++i) {
            if (c.parity(i).is_even()) p.values.push_back(uniform(c.box()[i].lo, c.box()[i].hi));
            else p.values.push_back(uniform(0.5, 1.5));
        }
        return p;
    }

    /// Rational point on the 1/1024 grid inside the box (even coordinates).
    std::vector<Rational> draw_rational(const Chart& c) {
        std::vector<Rational> v;
        for (std::size_t i = 0; i < c.dim(); ++i) {
            double x = c.parity(i).is_even() ? uniform(c.box()[i].lo, c.box()[i].hi) : 0.0;
            v.push_back(make_rational(std::lround(x * 1024.0), 1024));
        }
        return v;
    }

    std::mt19937_64& engine() noexcept { return rng_; }

private:
    std::mt19937_64 rng_;
};

// -------------------------------------------------------------- equality

struct EqualityPolicy {
    int samples = 32;
    double tol = 1e-9;
    std::uint64_t seed = 0;
    bool force_randomized = false;
};

enum class EqualityMode { exact, randomized };

inline const char* mode_name(EqualityMode m) { return m == EqualityMode::exact ? "exact" : "randomized"; }

struct EqualityReport {
    bool equal = false;
    EqualityMode mode = EqualityMode::exact;
    std::optional<std::vector<double>> witness;
    double max_error = 0.0;  // largest relative componentwise deviation seen
    int points = 0;          // evaluable sample points used
    std::string detail;

    explicit operator bool() const noexcept { return equal; }
};

namespace detail {

/// Relative deviation of a - b at one point, measured against the summed
/// magnitudes of the individual terms (robust to cancellation).
inline double relative_deviation(const Expr& diff, const Expr& a, const Expr& b, const SamplePoint& p) {
    Evaluator<double> ev(diff.chart(), p.values, p.body_only);
    std::map<std::vector<int>, GrassmannValue> val;
    std::map<std::vector<int>, double> mag;
    auto accumulate = [&](const Expr& e, bool sum) {
        for (const auto& [m, c] : e.terms()) {
            GrassmannValue t = ev.term(m, c);
            if (sum) {
                auto it = val.try_emplace(m.dx, ev.generators()).first;
                it->second += t;
            }
            mag[m.dx] += max_abs(t);
        }
    };
    accumulate(diff, true);
    accumulate(a, false);
    accumulate(b, false);
    double worst = 0;
    for (const auto& [pattern, v] : val) {
        double err = max_abs(v);
        if (!std::isfinite(err)) return INFINITY;
        double scale = std::max(mag[pattern], 1e-300);
        worst = std::max(worst, err / scale);
    }
    return worst;
}

} // namespace detail

/// Equality of two expressions: exact on canonical forms when decidable,
/// otherwise randomized identity testing at Grassmann-valued sample points.
inline EqualityReport equal(const Expr& a, const Expr& b, const EqualityPolicy& policy = {}) {
    require_same_chart(a.chart(), b.chart());
    EqualityReport rep;
    Expr diff = a - b;
    bool exact_domain = a.is_exact_laurent() && b.is_exact_laurent();
    if (!policy.force_randomized && (diff.is_zero() || exact_domain)) {
        rep.mode = EqualityMode::exact;
        rep.equal = diff.is_zero();
        if (!rep.equal) {
            // exhibit a point where the difference is visibly nonzero
            Sampler s(policy.seed);
            for (int k = 0; k < 8 * std::max(policy.samples, 1); ++k) {
                SamplePoint p = s.draw(*a.chart());
                try {
                    double dev = detail::relative_deviation(diff, a, b, p);
                    if (dev > 0) {
                        rep.witness = p.values;
                        rep.max_error = dev;
                        break;
                    }
                } catch (const EvaluationError&) {
                }
            }
            rep.detail = "canonical forms differ";
        }
        return rep;
    }
    rep.mode = EqualityMode::randomized;
    Sampler s(policy.seed);
    int attempts = 0;
    const int max_attempts = 20 * std::max(policy.samples, 1);
    while (rep.points < policy.samples && attempts < max_attempts) {
        ++attempts;
        SamplePoint p = s.draw(*a.chart());
        double dev;
        try {
            dev = detail::relative_deviation(diff, a, b, p);
        } catch (const EvaluationError&) {
            continue;
        }
        ++rep.points;
        rep.max_error = std::max(rep.max_error, dev);
        if (!(dev <= policy.tol)) {
            rep.equal = false;
            rep.witness = p.values;
            rep.detail = "componentwise deviation exceeds tolerance";
            return rep;
        }
    }
    if (rep.points == 0) {
        rep.equal = false;
        rep.detail = "no evaluable sample points";
        return rep;
    }
    rep.equal = true;
    return rep;
}

inline EqualityReport is_zero(const Expr& a, const EqualityPolicy& policy = {}) {
    return equal(a, Expr(a.chart()), policy);
}

} // namespace gdarboux
