#pragma once

#include <string>
#include <vector>

#include "expr.hpp"

namespace gdarboux {

std::string to_string(const Expr& e);

namespace detail {

inline bool needs_parens(const Expr& e) { return e.size() > 1 || (e.size() == 1 && e.terms().begin()->second.sign() < 0); }

inline std::string power_suffix(int e) { return e == 1 ? "" : "^" + std::to_string(e); }

/// Prints one monomial without its sign; `coeff` is the absolute coefficient.
inline std::string monomial_string(const Chart& c, const Monomial& m, const Coefficient& coeff) {
    std::vector<std::string> num, den;
    for (const auto& [atom, e] : m.atoms) {
        std::string s;
        if (atom.func == Func::inv) s = "(" + to_string(*atom.arg) + ")";
        else s = std::string(func_name(atom.func)) + "(" + to_string(*atom.arg) + ")";
        if (atom.func == Func::inv) den.push_back(s + power_suffix(e));
        else if (e > 0) num.push_back(s + power_suffix(e));
        else den.push_back(s + power_suffix(-e));
    }
    for (std::size_t i = 0; i < c.dim(); ++i) {
        if (m.x[i] > 0) num.push_back(c.name(i) + power_suffix(m.x[i]));
        else if (m.x[i] < 0) den.push_back(c.name(i) + power_suffix(-m.x[i]));
    }
    for (std::size_t i = 0; i < c.dim(); ++i)
        if (m.dx[i] > 0) num.push_back("d(" + c.name(i) + ")" + power_suffix(m.dx[i]));
    std::string out;
    bool unit_coeff = coeff.is_one();
    if (!unit_coeff || num.empty()) {
        std::string cs = coeff.str();
        // a bare ratio followed by a denominator would re-associate; keep it grouped
        if (!coeff.is_float() && coeff.rational().get_den() != 1 && !den.empty()) cs = "(" + cs + ")";
        out = cs;
    }
    for (const auto& s : num) {
        if (!out.empty()) out += "*";
        out += s;
    }
    for (const auto& s : den) out += "/" + s;
    return out;
}

} // namespace detail

/// Human-readable form in the input grammar; re-parses to an equal expression.
inline std::string to_string(const Expr& e) {
    if (e.is_zero()) return "0";
    const Chart& c = *e.chart();
    std::string out;
    bool first = true;
    for (const auto& [m, coeff] : e.terms()) {
        bool neg = coeff.sign() < 0;
        std::string body = detail::monomial_string(c, m, neg ? -coeff : coeff);
        if (first) out = neg ? "-" + body : body;
        else out += (neg ? " - " : " + ") + body;
        first = false;
    }
    return out;
}

} // namespace gdarboux
