#pragma once

#include <string>
#include <vector>

#include "expr.hpp"

namespace gdarboux {

namespace detail {

/// Antiderivative of u^e * f(a*u + b) with respect to u (even), by repeated
/// integration by parts. `atom` is absent for a plain power.
inline Expr power_times_atom_antiderivative(const ChartPtr& chart, std::size_t k, int e,
                                            const std::optional<Func>& f, const Expr& arg, const Expr& a) {
    Expr u = Expr::coordinate(chart, k);
    if (!f) {
        if (e == -1) return log(u);
        return Coefficient(make_rational(1, e + 1)) * pow(u, e + 1);
    }
    Func prim;
    bool negate = false;
    switch (*f) {
    case Func::sin: prim = Func::cos; negate = true; break;
    case Func::cos: prim = Func::sin; break;
    case Func::exp: prim = Func::exp; break;
    case Func::sinh: prim = Func::cosh; break;
    case Func::cosh: prim = Func::sinh; break;
    default: throw NonIntegrable(std::string(func_name(*f)) + " is not an integrable atom");
    }
    Expr F1 = make_atom(prim, arg);
    if (negate) F1 = -F1;
    Expr one = Expr::constant(chart, Coefficient(1));
    Expr inv_a = gdiv(one, a);
    // x^e F1 / a - (e/a) * int x^(e-1) F1
    Expr result = gmul(gmul(pow(u, e), F1), inv_a);
    if (e > 0) {
        Expr inner = power_times_atom_antiderivative(chart, k, e - 1, prim, arg, a);
        if (negate) inner = -inner;
        result -= Coefficient(static_cast<long>(e)) * gmul(inv_a, inner);
    }
    return result;
}

} // namespace detail

/// Antiderivative of g in the even coordinate x_k, with the integration
/// constant chosen by the bounds: returns F(upper) - F(lower), where F is the
/// pattern antiderivative and bounds are expressions substituted for x_k.
/// Supported per monomial: x_k^e times at most one of sin/cos/exp/sinh/cosh
/// with argument linear in x_k (e >= 0), or a pure power x_k^e (any e, with
/// e = -1 giving log). Anything else raises NonIntegrable.
inline Expr antiderivative(const Expr& g, std::size_t k) {
    const ChartPtr& chart = g.chart();
    const Chart& c = *chart;
    if (c.parity(k).is_odd()) throw NonIntegrable("integration variable must be even");
    if (!g.is_function()) throw NonIntegrable("integrand must have form-degree 0");
    Expr F(chart);
    for (const auto& [m, coeff] : g.terms()) {
        Monomial rest = m;
        int e = m.x[k];
        rest.x[k] = 0;
        std::optional<Func> f;
        Expr arg(chart), a(chart);
        rest.atoms.clear();
        for (const auto& [atom, ae] : m.atoms) {
            if (!atom.arg->depends_on(k)) {
                rest.atoms.push_back({atom, ae});
                continue;
            }
            if (f) throw NonIntegrable("more than one atom depends on the integration variable");
            if (ae != 1) throw NonIntegrable("atom power other than 1 in the integration variable");
            Expr slope = partial(*atom.arg, k);
            if (slope.depends_on(k)) throw NonIntegrable("atom argument is not linear in the integration variable");
            f = atom.func;
            arg = *atom.arg;
            a = slope;
        }
        if (f && e < 0) throw NonIntegrable("negative power times an atom");
        Expr piece = detail::power_times_atom_antiderivative(chart, k, e, f, arg, a);
        F += gmul(Expr::monomial(chart, std::move(rest), coeff), piece);
    }
    return F;
}

inline Expr integrate_univariate(const Expr& g, std::size_t k, const Expr& lower, const Expr& upper) {
    Expr F = antiderivative(g, k);
    std::vector<Expr> hi = coordinates(g.chart()), lo = hi;
    hi[k] = upper;
    lo[k] = lower;
    try {
        return substitute(F, hi) - substitute(F, lo);
    } catch (const DomainError& e) {
        throw NonIntegrable(std::string("antiderivative undefined at a bound: ") + e.what());
    }
}

/// Integral of g in x_k from 0 to x_k.
inline Expr integrate_from_zero(const Expr& g, std::size_t k) {
    return integrate_univariate(g, k, Expr(g.chart()), Expr::coordinate(g.chart(), k));
}

} // namespace gdarboux
