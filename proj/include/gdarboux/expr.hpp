#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chart.hpp"
#include "coefficient.hpp"
#include "error.hpp"

namespace gdarboux {

/// Transcendental atoms. `inv` is the reciprocal of an even function that is
/// not a monomial in even coordinates (those become Laurent exponents instead).
enum class Func { sin, cos, exp, log, sinh, cosh, inv };

inline const char* func_name(Func f) {
    switch (f) {
    case Func::sin: return "sin";
    case Func::cos: return "cos";
    case Func::exp: return "exp";
    case Func::log: return "log";
    case Func::sinh: return "sinh";
    case Func::cosh: return "cosh";
    case Func::inv: return "inv";
    }
    return "?";
}

class Expr;

struct Atom {
    Func func;
    std::shared_ptr<const Expr> arg;
};

int compare(const Expr& a, const Expr& b);

inline int compare(const Atom& a, const Atom& b) {
    if (a.func != b.func) return a.func < b.func ? -1 : 1;
    if (a.arg == b.arg) return 0;
    return compare(*a.arg, *b.arg);
}

/// One term without its coefficient: atoms (even, commute with everything),
/// then coordinate powers in chart order, then differential powers in chart
/// order. Even coordinates may carry negative (Laurent) exponents.
struct Monomial {
    std::vector<std::pair<Atom, int>> atoms;
    std::vector<int> x;
    std::vector<int> dx;

    explicit Monomial(std::size_t n = 0) : x(n, 0), dx(n, 0) {}

    int form_degree() const {
        int p = 0;
        for (int f : dx) p += f;
        return p;
    }
    Parity parity(const Chart& c) const {
        int s = 0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (c.parity(i).is_odd()) s += x[i] + dx[i];
        return Parity(s);
    }
    bool is_unit() const {
        return atoms.empty() && std::all_of(x.begin(), x.end(), [](int e) { return e == 0; }) &&
               std::all_of(dx.begin(), dx.end(), [](int e) { return e == 0; });
    }
    bool has_negative_exponent() const {
        return std::any_of(x.begin(), x.end(), [](int e) { return e < 0; });
    }
    Monomial function_part() const {
        Monomial m = *this;
        std::fill(m.dx.begin(), m.dx.end(), 0);
        return m;
    }
};

inline int compare(const Monomial& a, const Monomial& b) {
    if (a.dx != b.dx) return a.dx < b.dx ? -1 : 1;
    if (a.x != b.x) return a.x < b.x ? -1 : 1;
    std::size_t n = std::min(a.atoms.size(), b.atoms.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare(a.atoms[i].first, b.atoms[i].first)) return c;
        if (a.atoms[i].second != b.atoms[i].second) return a.atoms[i].second < b.atoms[i].second ? -1 : 1;
    }
    if (a.atoms.size() != b.atoms.size()) return a.atoms.size() < b.atoms.size() ? -1 : 1;
    return 0;
}

struct MonomialLess {
    bool operator()(const Monomial& a, const Monomial& b) const { return compare(a, b) < 0; }
};

/// A generator of the bigraded algebra: a coordinate or its differential.
struct Generator {
    enum class Kind { coordinate, differential } kind;
    std::size_t index;
};

/// Canonical element of the bigraded algebra generated by the coordinates of a
/// chart and their differentials. Always stored merged and free of zero terms,
/// so zero is the empty sum.
class Expr {
public:
    using TermMap = std::map<Monomial, Coefficient, MonomialLess>;

    explicit Expr(ChartPtr chart) : chart_(std::move(chart)) {
        if (!chart_) throw Error("expression without chart");
    }
    Expr(ChartPtr chart, TermMap terms) : chart_(std::move(chart)), terms_(std::move(terms)) {}

    static Expr constant(ChartPtr chart, const Coefficient& c) {
        Expr e(std::move(chart));
        if (!c.is_zero()) e.terms_.emplace(Monomial(e.chart_->dim()), c);
        return e;
    }
    static Expr coordinate(ChartPtr chart, std::size_t i) {
        Expr e(std::move(chart));
        Monomial m(e.chart_->dim());
        m.x.at(i) = 1;
        e.terms_.emplace(std::move(m), Coefficient(1));
        return e;
    }
    static Expr coordinate(const ChartPtr& chart, const std::string& name) {
        return coordinate(chart, chart->index(name));
    }
    static Expr differential(ChartPtr chart, std::size_t i) {
        Expr e(std::move(chart));
        Monomial m(e.chart_->dim());
        m.dx.at(i) = 1;
        e.terms_.emplace(std::move(m), Coefficient(1));
        return e;
    }
    static Expr differential(const ChartPtr& chart, const std::string& name) {
        return differential(chart, chart->index(name));
    }
    static Expr monomial(ChartPtr chart, Monomial m, Coefficient c) {
        Expr e(std::move(chart));
        if (!c.is_zero()) e.terms_.emplace(std::move(m), std::move(c));
        return e;
    }

    const ChartPtr& chart() const noexcept { return chart_; }
    const TermMap& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }
    std::size_t size() const noexcept { return terms_.size(); }

    /// Adds c*m into the sum, merging like terms.
    void add_term(const Monomial& m, const Coefficient& c) {
        if (c.is_zero()) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
            return;
        }
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }

    std::optional<int> form_degree() const {
        if (terms_.empty()) return 0;
        int p = terms_.begin()->first.form_degree();
        for (const auto& [m, c] : terms_)
            if (m.form_degree() != p) return std::nullopt;
        return p;
    }
    int max_form_degree() const {
        int p = 0;
        for (const auto& [m, c] : terms_) p = std::max(p, m.form_degree());
        return p;
    }
    bool is_function() const {
        return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.form_degree() == 0; });
    }
    /// Parity when all terms agree; zero counts as even.
    std::optional<Parity> parity() const {
        if (terms_.empty()) return Parity::even();
        Parity p = terms_.begin()->first.parity(*chart_);
        for (const auto& [m, c] : terms_)
            if (!(m.parity(*chart_) == p)) return std::nullopt;
        return p;
    }
    bool has_atoms() const {
        return std::any_of(terms_.begin(), terms_.end(), [](const auto& t) { return !t.first.atoms.empty(); });
    }
    bool has_float() const;
    bool has_negative_exponents() const {
        return std::any_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.has_negative_exponent(); });
    }
    /// Atom-free with exact coefficients: equality is decidable structurally.
    bool is_exact_laurent() const { return !has_atoms() && !has_float(); }
    bool is_polynomial() const { return is_exact_laurent() && !has_negative_exponents(); }
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_unit());
    }
    Coefficient constant_value() const {
        if (terms_.empty()) return Coefficient(0);
        if (!is_constant()) throw Error("expression is not constant");
        return terms_.begin()->second;
    }
    /// True when coordinate i occurs anywhere, including inside atom arguments.
    bool depends_on(std::size_t i) const;

    Expr operator-() const {
        Expr r = *this;
        for (auto& [m, c] : r.terms_) c = -c;
        return r;
    }

private:
    ChartPtr chart_;
    TermMap terms_;
};

inline int compare(const Expr& a, const Expr& b) {
    auto ia = a.terms().begin(), ib = b.terms().begin();
    for (; ia != a.terms().end() && ib != b.terms().end(); ++ia, ++ib) {
        if (int c = compare(ia->first, ib->first)) return c;
        if (int c = compare(ia->second, ib->second)) return c;
    }
    if (ia != a.terms().end()) return 1;
    if (ib != b.terms().end()) return -1;
    return 0;
}

/// Structural equality of canonical forms.
inline bool identical(const Expr& a, const Expr& b) {
    return same_chart(a.chart(), b.chart()) && compare(a, b) == 0;
}

inline bool Expr::has_float() const {
    for (const auto& [m, c] : terms_) {
        if (c.is_float()) return true;
        for (const auto& [atom, e] : m.atoms)
            if (atom.arg->has_float()) return true;
    }
    return false;
}

inline bool Expr::depends_on(std::size_t i) const {
    for (const auto& [m, c] : terms_) {
        if (m.x[i] != 0) return true;
        for (const auto& [atom, e] : m.atoms)
            if (atom.arg->depends_on(i)) return true;
    }
    return false;
}

namespace detail {

/// Bidegree (form degree, parity) of a block g^e at canonical position pos.
inline std::pair<int, int> block_bidegree(const Chart& c, const Monomial& m, std::size_t pos) {
    std::size_t n = c.dim();
    if (pos < n) return {0, c.parity(pos).value * m.x[pos]};
    std::size_t i = pos - n;
    return {m.dx[i], c.parity(i).value * m.dx[i]};
}

inline void merge_atoms(std::vector<std::pair<Atom, int>>& into, const std::vector<std::pair<Atom, int>>& from) {
    for (const auto& [atom, e] : from) {
        auto it = std::lower_bound(into.begin(), into.end(), atom,
                                   [](const auto& p, const Atom& a) { return compare(p.first, a) < 0; });
        if (it != into.end() && compare(it->first, atom) == 0) {
            it->second += e;
            if (it->second == 0) into.erase(it);
        } else {
            into.insert(it, {atom, e});
        }
    }
}

/// Product of two monomials with the Koszul sign of moving every block of b
/// left past the blocks of a that sit later in the canonical order.
/// Returns 0 when a square-zero generator repeats.
inline int multiply_monomials(const Chart& c, const Monomial& a, const Monomial& b, Monomial& out) {
    std::size_t n = c.dim();
    out = a;
    merge_atoms(out.atoms, b.atoms);
    // suffix totals of a's bidegrees over positions > j
    int sign_exp = 0;
    int suffix_p = 0, suffix_s = 0;
    for (std::size_t pos = 2 * n; pos-- > 0;) {
        auto [q, tau] = block_bidegree(c, b, pos);
        if (q != 0 || tau != 0) sign_exp += suffix_p * q + suffix_s * tau;
        auto [p, sigma] = block_bidegree(c, a, pos);
        suffix_p += p;
        suffix_s += sigma;
    }
    for (std::size_t i = 0; i < n; ++i) {
        bool odd = c.parity(i).is_odd();
        if (b.x[i] != 0) {
            if (odd && a.x[i] != 0) return 0;
            out.x[i] = a.x[i] + b.x[i];
        }
        if (b.dx[i] != 0) {
            if (!odd && a.dx[i] != 0) return 0;
            out.dx[i] = a.dx[i] + b.dx[i];
        }
    }
    return (sign_exp % 2) ? -1 : 1;
}

} // namespace detail

// ---------------------------------------------------------------- arithmetic

inline Expr operator+(const Expr& a, const Expr& b) {
    require_same_chart(a.chart(), b.chart());
    if (a.size() < b.size()) return b + a;
    Expr r = a;
    for (const auto& [m, c] : b.terms()) r.add_term(m, c);
    return r;
}

inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

inline Expr operator*(const Coefficient& k, const Expr& a) {
    if (k.is_zero()) return Expr(a.chart());
    Expr::TermMap t;
    for (const auto& [m, c] : a.terms()) {
        Coefficient v = k * c;
        if (!v.is_zero()) t.emplace(m, v);
    }
    return Expr(a.chart(), std::move(t));
}

/// Graded product (wedge product when both factors carry differentials).
inline Expr gmul(const Expr& a, const Expr& b) {
    require_same_chart(a.chart(), b.chart());
    Expr r(a.chart());
    if (a.is_zero() || b.is_zero()) return r;
    const Chart& c = *a.chart();
    Monomial out;
    for (const auto& [ma, ca] : a.terms())
        for (const auto& [mb, cb] : b.terms()) {
            int s = detail::multiply_monomials(c, ma, mb, out);
            if (s == 0) continue;
            Coefficient v = ca * cb;
            r.add_term(out, s > 0 ? v : -v);
        }
    return r;
}

inline Expr operator*(const Expr& a, const Expr& b) { return gmul(a, b); }

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }

/// Builds coefficient * g1 * g2 * ... by successive graded products of the
/// single generators, in the given (arbitrary) order.
inline Expr from_word(const ChartPtr& chart, const Coefficient& coeff, std::span<const Generator> word) {
    Expr r = Expr::constant(chart, coeff);
    for (const auto& g : word)
        r = gmul(r, g.kind == Generator::Kind::coordinate ? Expr::coordinate(chart, g.index)
                                                          : Expr::differential(chart, g.index));
    return r;
}

/// A raw, not yet canonical term: coefficient times a word of generators.
struct RawTerm {
    Coefficient coeff;
    std::vector<Generator> word;
};

/// Canonical form of a sum of raw words: fixed generator order, Koszul signs
/// applied, like terms merged, square-zero words dropped.
inline Expr canonicalize(const ChartPtr& chart, std::span<const RawTerm> terms) {
    Expr r(chart);
    for (const auto& t : terms) r += from_word(chart, t.coeff, t.word);
    return r;
}

/// Re-canonicalizes an expression (idempotent on already canonical input).
inline Expr canonicalize(const Expr& a) {
    Expr r(a.chart());
    for (const auto& [m, c] : a.terms()) r.add_term(m, c);
    return r;
}

// --------------------------------------------------------------- atoms / div

Expr make_atom(Func f, const Expr& arg);
Expr gdiv(const Expr& a, const Expr& b);

namespace detail {

inline Expr atom_power(const ChartPtr& chart, const Atom& atom, int e) {
    Monomial m(chart->dim());
    m.atoms.push_back({atom, e});
    return Expr::monomial(chart, std::move(m), Coefficient(1));
}

/// Inverse of a single term that contains no odd coordinates and no
/// differentials; returns nullopt otherwise.
inline std::optional<Expr> invert_monomial(const ChartPtr& chart, const Monomial& m, const Coefficient& c) {
    const Chart& ch = *chart;
    for (std::size_t i = 0; i < ch.dim(); ++i) {
        if (m.dx[i] != 0) return std::nullopt;
        if (ch.parity(i).is_odd() && m.x[i] != 0) return std::nullopt;
    }
    Monomial inv(ch.dim());
    for (std::size_t i = 0; i < ch.dim(); ++i) inv.x[i] = -m.x[i];
    Expr extra = Expr::constant(chart, Coefficient(1));
    for (const auto& [atom, e] : m.atoms) {
        if (atom.func == Func::inv) {
            Expr u = *atom.arg;
            for (int k = 0; k < e; ++k) extra = gmul(extra, u);
        } else {
            inv.atoms.push_back({atom, -e});
        }
    }
    return gmul(Expr::monomial(chart, std::move(inv), Coefficient(1) / c), extra);
}

inline void require_even_function(const Expr& e, const char* what) {
    if (!e.is_function()) throw ParityError(std::string(what) + " must have form-degree 0");
    auto p = e.parity();
    if (!p || p->is_odd()) throw ParityError(std::string(what) + " must be even");
}

} // namespace detail

/// Canonical transcendental atom f(arg). Folds trivial constants and
/// normalizes signs/scales so that equal atoms compare identical.
inline Expr make_atom(Func f, const Expr& arg) {
    detail::require_even_function(arg, "argument of a transcendental function");
    const ChartPtr& chart = arg.chart();
    auto cst = [&](long v) { return Expr::constant(chart, Coefficient(v)); };
    if (arg.is_zero()) {
        switch (f) {
        case Func::sin:
        case Func::sinh: return Expr(chart);
        case Func::cos:
        case Func::cosh:
        case Func::exp: return cst(1);
        case Func::log: throw DomainError("log(0)");
        case Func::inv: throw DomainError("division by zero");
        }
    }
    if (arg.is_constant()) {
        Coefficient v = arg.constant_value();
        if (f == Func::inv) return Expr::constant(chart, Coefficient(1) / v);
        if (f == Func::log && v.is_one()) return Expr(chart);
        if (v.is_float()) {
            double x = v.to_double();
            double r = 0;
            switch (f) {
            case Func::sin: r = std::sin(x); break;
            case Func::cos: r = std::cos(x); break;
            case Func::exp: r = std::exp(x); break;
            case Func::log:
                if (x <= 0) throw DomainError("log of a nonpositive constant");
                r = std::log(x);
                break;
            case Func::sinh: r = std::sinh(x); break;
            case Func::cosh: r = std::cosh(x); break;
            case Func::inv: break;
            }
            return Expr::constant(chart, Coefficient::from_double(r));
        }
    }
    if (f == Func::inv) {
        if (arg.size() == 1) {
            const auto& [m, c] = *arg.terms().begin();
            if (auto r = detail::invert_monomial(chart, m, c)) return *r;
        }
        // leading coefficient normalized to 1
        Coefficient lead = arg.terms().begin()->second;
        Expr u = (Coefficient(1) / lead) * arg;
        Atom a{Func::inv, std::make_shared<const Expr>(std::move(u))};
        return (Coefficient(1) / lead) * detail::atom_power(chart, a, 1);
    }
    int lead_sign = arg.terms().begin()->second.sign();
    if (lead_sign < 0 && f != Func::exp && f != Func::log) {
        Atom a{f, std::make_shared<const Expr>(-arg)};
        Expr r = detail::atom_power(chart, a, 1);
        bool odd_fn = f == Func::sin || f == Func::sinh;
        return odd_fn ? -r : r;
    }
    Atom a{f, std::make_shared<const Expr>(arg)};
    return detail::atom_power(chart, a, 1);
}

inline Expr sin(const Expr& a) { return make_atom(Func::sin, a); }
inline Expr cos(const Expr& a) { return make_atom(Func::cos, a); }
inline Expr exp(const Expr& a) { return make_atom(Func::exp, a); }
inline Expr log(const Expr& a) { return make_atom(Func::log, a); }
inline Expr sinh(const Expr& a) { return make_atom(Func::sinh, a); }
inline Expr cosh(const Expr& a) { return make_atom(Func::cosh, a); }

/// Quotient a / b for an even, form-degree-0 denominator. Monomial
/// denominators cancel exactly (Laurent exponents); proportional operands
/// collapse to the constant ratio; anything else keeps a reciprocal atom.
inline Expr gdiv(const Expr& a, const Expr& b) {
    require_same_chart(a.chart(), b.chart());
    detail::require_even_function(b, "denominator");
    if (b.is_zero()) throw DomainError("division by zero");
    if (a.is_zero()) return a;
    if (b.size() == 1) {
        const auto& [m, c] = *b.terms().begin();
        if (auto r = detail::invert_monomial(b.chart(), m, c)) return gmul(a, *r);
    }
    if (a.size() == b.size()) {
        Coefficient ratio = a.terms().begin()->second / b.terms().begin()->second;
        bool proportional = true;
        auto ia = a.terms().begin();
        for (auto ib = b.terms().begin(); ib != b.terms().end(); ++ia, ++ib) {
            if (compare(ia->first, ib->first) != 0 || !(ia->second == ratio * ib->second)) {
                proportional = false;
                break;
            }
        }
        if (proportional) return Expr::constant(a.chart(), ratio);
    }
    return gmul(a, make_atom(Func::inv, b));
}

inline Expr operator/(const Expr& a, const Expr& b) { return gdiv(a, b); }

/// Integer power; negative exponents divide.
inline Expr pow(const Expr& base, int e) {
    if (e < 0) return gdiv(Expr::constant(base.chart(), Coefficient(1)), pow(base, -e));
    Expr result = Expr::constant(base.chart(), Coefficient(1));
    Expr sq = base;
    while (e > 0) {
        if (e & 1) result = gmul(result, sq);
        e >>= 1;
        if (e) sq = gmul(sq, sq);
    }
    return result;
}

// --------------------------------------------------------------- derivative

namespace detail {

inline Expr atom_derivative(Func f, const Expr& u) {
    const ChartPtr& ch = u.chart();
    switch (f) {
    case Func::sin: return cos(u);
    case Func::cos: return -sin(u);
    case Func::exp: return exp(u);
    case Func::log: return gdiv(Expr::constant(ch, Coefficient(1)), u);
    case Func::sinh: return cosh(u);
    case Func::cosh: return sinh(u);
    case Func::inv: {
        Expr r = make_atom(Func::inv, u);
        return -gmul(r, r);
    }
    }
    return Expr(ch);
}

inline Expr rebuild_atom(const Atom& a) {
    return a.func == Func::inv ? make_atom(Func::inv, *a.arg) : make_atom(a.func, *a.arg);
}

} // namespace detail

/// Left partial derivative with respect to coordinate k. Differentials are
/// constants. Graded Leibniz: d_k(uv) = (d_k u) v + (-1)^{s_k s_u} u (d_k v).
inline Expr partial(const Expr& a, std::size_t k) {
    const ChartPtr& chart = a.chart();
    const Chart& c = *chart;
    if (k >= c.dim()) throw Error("partial: coordinate index out of range");
    bool odd_k = c.parity(k).is_odd();
    Expr r(chart);
    for (const auto& [m, coeff] : a.terms()) {
        // coordinate block
        if (m.x[k] != 0) {
            int passed = 0;
            if (odd_k)
                for (std::size_t i = 0; i < k; ++i)
                    if (c.parity(i).is_odd()) passed += m.x[i];
            Monomial d = m;
            int e = m.x[k];
            d.x[k] = e - 1;
            Coefficient v = coeff * Coefficient(static_cast<long>(e));
            r.add_term(d, (passed % 2) ? -v : v);
        }
        // atom chain rule; atoms are even so they sit at the far left
        for (std::size_t j = 0; j < m.atoms.size(); ++j) {
            const auto& [atom, e] = m.atoms[j];
            if (!atom.arg->depends_on(k)) continue;
            Expr inner = partial(*atom.arg, k);
            if (inner.is_zero()) continue;
            Monomial rest = m;
            rest.atoms.erase(rest.atoms.begin() + static_cast<long>(j));
            Expr factor = detail::atom_derivative(atom.func, *atom.arg);
            if (e != 1) {
                Atom same = atom;
                factor = gmul(Coefficient(static_cast<long>(e)) * detail::atom_power(chart, same, e - 1), factor);
            }
            r += gmul(gmul(factor, inner), Expr::monomial(chart, std::move(rest), coeff));
        }
    }
    return r;
}

inline Expr partial(const Expr& a, const std::string& name) { return partial(a, a.chart()->index(name)); }

// ------------------------------------------------------------- substitution

/// Graded-algebra homomorphism sending coordinate i to coord_images[i] and
/// d(x^i) to diff_images[i]. Images live on a common (possibly different)
/// chart. An empty diff_images means "d of the coordinate image".
Expr substitute(const Expr& a, const std::vector<Expr>& coord_images, const std::vector<Expr>& diff_images);

inline Expr substitute(const Expr& a, const std::vector<Expr>& coord_images) {
    return substitute(a, coord_images, {});
}

namespace detail {

struct SubstitutionCache {
    std::vector<std::map<int, Expr>> coord_pows;
    std::vector<std::map<int, Expr>> diff_pows;
};

inline const Expr& cached_power(std::map<int, Expr>& cache, const Expr& base, int e) {
    auto it = cache.find(e);
    if (it != cache.end()) return it->second;
    return cache.emplace(e, pow(base, e)).first->second;
}

inline Expr substitute_impl(const Expr& a, const std::vector<Expr>& ci, const std::vector<Expr>& di,
                            const ChartPtr& target, SubstitutionCache& cache) {
    const Chart& c = *a.chart();
    Expr r(target);
    for (const auto& [m, coeff] : a.terms()) {
        Expr term = Expr::constant(target, coeff);
        for (const auto& [atom, e] : m.atoms) {
            Expr arg = substitute_impl(*atom.arg, ci, di, target, cache);
            Expr f = make_atom(atom.func, arg);
            term = gmul(term, pow(f, e));
            if (term.is_zero()) break;
        }
        for (std::size_t i = 0; i < c.dim() && !term.is_zero(); ++i)
            if (m.x[i] != 0) term = gmul(term, cached_power(cache.coord_pows[i], ci[i], m.x[i]));
        for (std::size_t i = 0; i < c.dim() && !term.is_zero(); ++i)
            if (m.dx[i] != 0) {
                if (di.empty()) throw Error("substitute: missing differential image");
                term = gmul(term, cached_power(cache.diff_pows[i], di[i], m.dx[i]));
            }
        r += term;
    }
    return r;
}

} // namespace detail

inline Expr substitute(const Expr& a, const std::vector<Expr>& coord_images, const std::vector<Expr>& diff_images) {
    const Chart& c = *a.chart();
    if (coord_images.size() != c.dim()) throw Error("substitute: need one image per coordinate");
    if (!diff_images.empty() && diff_images.size() != c.dim())
        throw Error("substitute: need one differential image per coordinate");
    const ChartPtr& target = coord_images.front().chart();
    for (std::size_t i = 0; i < c.dim(); ++i) {
        const Expr& img = coord_images[i];
        require_same_chart(img.chart(), target);
        if (!img.is_function()) throw ParityError("image of '" + c.name(i) + "' must have form-degree 0");
        auto p = img.parity();
        if (!img.is_zero() && (!p || !(*p == c.parity(i))))
            throw ParityError("image of '" + c.name(i) + "' has the wrong parity");
        if (!diff_images.empty()) {
            const Expr& di = diff_images[i];
            require_same_chart(di.chart(), target);
            auto fd = di.form_degree();
            auto dp = di.parity();
            if (!di.is_zero() && (!fd || *fd != 1 || !dp || !(*dp == c.parity(i))))
                throw ParityError("image of d(" + c.name(i) + ") must be a 1-form of parity " + c.parity(i).str());
        }
    }
    detail::SubstitutionCache cache{std::vector<std::map<int, Expr>>(c.dim()),
                                    std::vector<std::map<int, Expr>>(c.dim())};
    return detail::substitute_impl(a, coord_images, diff_images, target, cache);
}

/// Coordinate functions of a chart, in order.
inline std::vector<Expr> coordinates(const ChartPtr& chart) {
    std::vector<Expr> v;
    for (std::size_t i = 0; i < chart->dim(); ++i) v.push_back(Expr::coordinate(chart, i));
    return v;
}

/// Splits a form into its coefficient functions, keyed by differential
/// pattern: a = sum over patterns D of F_D * D (coefficients on the left).
inline std::map<std::vector<int>, Expr> components(const Expr& a) {
    std::map<std::vector<int>, Expr> out;
    for (const auto& [m, c] : a.terms()) {
        auto it = out.try_emplace(m.dx, a.chart()).first;
        it->second.add_term(m.function_part(), c);
    }
    return out;
}

/// Product of the differentials in a pattern, in canonical order.
inline Expr differential_monomial(const ChartPtr& chart, const std::vector<int>& pattern) {
    Monomial m(chart->dim());
    m.dx = pattern;
    return Expr::monomial(chart, std::move(m), Coefficient(1));
}

/// Moves an expression onto another chart with the same coordinates (e.g. a
/// chart differing only in its sampling box).
inline Expr rebase(const Expr& a, const ChartPtr& chart) {
    require_same_chart(a.chart(), chart);
    return Expr(chart, a.terms());
}

} // namespace gdarboux
