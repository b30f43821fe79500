#pragma once

// Independent reference implementations used to cross-check the library.

#include <vector>

#include <gdarboux/expr.hpp>

namespace testsupport {

using namespace gdarboux;

/// Reorders a word of generators into canonical order by adjacent swaps,
/// applying (-1)^{pq + st} per swap of bidegrees (p,s), (q,t), and returns
/// the resulting expression built directly from exponent counts. Square-zero
/// neighbours kill the word. Shares no code with gmul.
inline Expr koszul_bubble_sort(const ChartPtr& chart, long coeff, std::vector<Generator> w) {
    const Chart& c = *chart;
    auto key = [&](const Generator& g) {
        return (g.kind == Generator::Kind::coordinate ? 0 : c.dim()) + g.index;
    };
    auto bideg = [&](const Generator& g) {
        int p = g.kind == Generator::Kind::differential ? 1 : 0;
        return std::pair<int, int>{p, c.parity(g.index).value};
    };
    auto square_zero = [&](const Generator& g) {
        bool odd = c.parity(g.index).is_odd();
        return g.kind == Generator::Kind::coordinate ? odd : !odd;
    };
    int sign = 1;
    bool swapped = true;
    while (swapped) {
        swapped = false;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            if (key(w[i]) > key(w[i + 1])) {
                auto [p, s] = bideg(w[i]);
                auto [q, t] = bideg(w[i + 1]);
                if ((p * q + s * t) % 2) sign = -sign;
                std::swap(w[i], w[i + 1]);
                swapped = true;
            }
        }
    }
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        if (key(w[i]) == key(w[i + 1]) && square_zero(w[i])) return Expr(chart);
    Monomial m(c.dim());
    for (const auto& g : w) (g.kind == Generator::Kind::coordinate ? m.x : m.dx)[g.index] += 1;
    return Expr::monomial(chart, m, Coefficient(coeff * sign));
}

} // namespace testsupport
