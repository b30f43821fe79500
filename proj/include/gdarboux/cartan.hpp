#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eval.hpp"
#include "expr.hpp"
#include "print.hpp"

namespace gdarboux {

/// X = sum_i X^i d/dx^i with the coefficient on the left. The coefficient of
/// x^i has parity parity(X) + parity(x^i).
class VectorField {
public:
    VectorField(ChartPtr chart, Parity parity, std::vector<Expr> coeffs)
        : chart_(std::move(chart)), parity_(parity), coeffs_(std::move(coeffs)) {
        const Chart& c = *chart_;
        if (coeffs_.size() != c.dim()) throw Error("vector field needs one coefficient per coordinate");
        for (std::size_t i = 0; i < c.dim(); ++i) {
            require_same_chart(coeffs_[i].chart(), chart_);
            if (coeffs_[i].is_zero()) continue;
            if (!coeffs_[i].is_function())
                throw ParityError("vector field coefficient of '" + c.name(i) + "' must have form-degree 0");
            auto p = coeffs_[i].parity();
            if (!p || !(*p == parity_ + c.parity(i)))
                throw ParityError("vector field coefficient of '" + c.name(i) + "' has the wrong parity");
        }
    }

    static VectorField zero(const ChartPtr& chart, Parity parity = Parity::even()) {
        return VectorField(chart, parity, std::vector<Expr>(chart->dim(), Expr(chart)));
    }
    /// Coordinate field d/dx^i.
    static VectorField coordinate(const ChartPtr& chart, std::size_t i) {
        VectorField v = zero(chart, chart->parity(i));
        v.coeffs_[i] = Expr::constant(chart, Coefficient(1));
        return v;
    }
    static VectorField coordinate(const ChartPtr& chart, const std::string& name) {
        return coordinate(chart, chart->index(name));
    }

    const ChartPtr& chart() const noexcept { return chart_; }
    Parity parity() const noexcept { return parity_; }
    const std::vector<Expr>& coeffs() const noexcept { return coeffs_; }
    const Expr& operator[](std::size_t i) const { return coeffs_[i]; }
    bool is_zero() const {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](const Expr& e) { return e.is_zero(); });
    }

    /// X(f) = sum_i X^i d_i f, applied to any expression (differentials are
    /// constants for d_i).
    Expr operator()(const Expr& f) const {
        require_same_chart(f.chart(), chart_);
        Expr r(chart_);
        for (std::size_t i = 0; i < coeffs_.size(); ++i)
            if (!coeffs_[i].is_zero()) r += gmul(coeffs_[i], partial(f, i));
        return r;
    }

    friend VectorField operator+(const VectorField& a, const VectorField& b) {
        require_same_chart(a.chart_, b.chart_);
        if (!(a.parity_ == b.parity_)) throw ParityError("adding vector fields of different parity");
        std::vector<Expr> c;
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i) c.push_back(a.coeffs_[i] + b.coeffs_[i]);
        return VectorField(a.chart_, a.parity_, std::move(c));
    }
    friend VectorField operator-(const VectorField& a, const VectorField& b) {
        return a + (Coefficient(-1) * b);
    }
    friend VectorField operator*(const Coefficient& k, const VectorField& a) {
        std::vector<Expr> c;
        for (const auto& e : a.coeffs_) c.push_back(k * e);
        return VectorField(a.chart_, a.parity_, std::move(c));
    }
    /// Left multiplication by a function: (fX)^i = f X^i.
    friend VectorField operator*(const Expr& f, const VectorField& a) {
        auto p = f.parity();
        if (!f.is_function() || !p) throw ParityError("multiplier of a vector field must be a homogeneous function");
        std::vector<Expr> c;
        for (const auto& e : a.coeffs_) c.push_back(gmul(f, e));
        return VectorField(a.chart_, f.is_zero() ? a.parity_ : a.parity_ + *p, std::move(c));
    }

private:
    ChartPtr chart_;
    Parity parity_;
    std::vector<Expr> coeffs_;
};

inline std::string to_string(const VectorField& v) {
    std::string out;
    const Chart& c = *v.chart();
    for (std::size_t i = 0; i < c.dim(); ++i) {
        if (v[i].is_zero()) continue;
        if (!out.empty()) out += " + ";
        std::string co = to_string(v[i]);
        std::string dd = "d/d" + c.name(i);
        if (co == "1") out += dd;
        else out += (detail::needs_parens(v[i]) ? "(" + co + ")" : co) + "*" + dd;
    }
    return out.empty() ? "0" : out;
}

/// Equality of vector fields coefficientwise; reports the worst component.
inline EqualityReport equal(const VectorField& a, const VectorField& b, const EqualityPolicy& policy = {}) {
    require_same_chart(a.chart(), b.chart());
    EqualityReport worst;
    worst.equal = true;
    for (std::size_t i = 0; i < a.coeffs().size(); ++i) {
        EqualityReport r = equal(a[i], b[i], policy);
        if (r.mode == EqualityMode::randomized) worst.mode = EqualityMode::randomized;
        worst.max_error = std::max(worst.max_error, r.max_error);
        worst.points = std::max(worst.points, r.points);
        if (!r.equal) {
            r.detail = "component " + a.chart()->name(i) + ": " + r.detail;
            return r;
        }
    }
    return worst;
}

// --------------------------------------------------------------- operators

/// Exterior derivative: d(w) = sum_k d(x^k) * d_k(w); bidegree (1, even).
inline Expr exterior_d(const Expr& w) {
    const ChartPtr& chart = w.chart();
    Expr r(chart);
    for (std::size_t k = 0; k < chart->dim(); ++k) {
        Expr pk = partial(w, k);
        if (!pk.is_zero()) r += gmul(Expr::differential(chart, k), pk);
    }
    return r;
}

/// Interior product: the derivation of bidegree (-1, parity(X)) with
/// i_X(x) = 0 and i_X(d(x^j)) = X^j.
inline Expr interior(const VectorField& X, const Expr& w) {
    const ChartPtr& chart = w.chart();
    require_same_chart(X.chart(), chart);
    const Chart& c = *chart;
    Expr r(chart);
    int sx = X.parity().value;
    for (const auto& [m, coeff] : w.terms()) {
        if (m.form_degree() == 0) throw ParityError("interior product of a form-degree-0 expression");
        Monomial fpart = m.function_part();
        // i_X first passes the function part, then each earlier differential block
        int sf = 0;
        for (std::size_t i = 0; i < c.dim(); ++i)
            if (c.parity(i).is_odd()) sf += m.x[i];
        int s = sx * sf;
        Expr left = Expr::monomial(chart, fpart, coeff);
        Monomial before(c.dim());
        for (std::size_t j = 0; j < c.dim(); ++j) {
            int f = m.dx[j];
            if (f == 0) continue;
            if (!X[j].is_zero()) {
                Monomial after(c.dim());
                after.dx[j] = f - 1;
                for (std::size_t l = j + 1; l < c.dim(); ++l) after.dx[l] = m.dx[l];
                Expr piece = gmul(gmul(left, Expr::monomial(chart, before, Coefficient(1))), X[j]);
                piece = gmul(piece, Expr::monomial(chart, std::move(after), Coefficient(static_cast<long>(f))));
                r += (s % 2) ? -piece : piece;
            }
            before.dx[j] = f;
            s += f * (1 + sx * c.parity(j).value);
        }
    }
    return r;
}

/// Lie derivative of a form (or function): L_X = d i_X + i_X d.
inline Expr lie_derivative(const VectorField& X, const Expr& w) {
    Expr higher(w.chart());
    for (const auto& [m, c] : w.terms())
        if (m.form_degree() > 0) higher.add_term(m, c);
    Expr r = interior(X, exterior_d(w));
    if (!higher.is_zero()) r += exterior_d(interior(X, higher));
    return r;
}

/// Graded commutator [X, Y]^i = X(Y^i) - (-1)^{|X||Y|} Y(X^i).
inline VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
    require_same_chart(X.chart(), Y.chart());
    bool sign_flip = X.parity().is_odd() && Y.parity().is_odd();
    std::vector<Expr> c;
    for (std::size_t i = 0; i < X.coeffs().size(); ++i) {
        Expr a = X(Y[i]), b = Y(X[i]);
        c.push_back(sign_flip ? a + b : a - b);
    }
    return VectorField(X.chart(), X.parity() + Y.parity(), std::move(c));
}

inline VectorField lie_derivative(const VectorField& X, const VectorField& Y) { return lie_bracket(X, Y); }

// ------------------------------------------------------------- chart maps

/// Coordinate change: each target coordinate is an expression in the source
/// coordinates; optionally the inverse (source coordinates in target ones).
struct ChartMap {
    ChartPtr source;
    ChartPtr target;
    std::vector<Expr> images;                  // on source, one per target coordinate
    std::optional<std::vector<Expr>> inverse;  // on target, one per source coordinate

    ChartMap(ChartPtr src, ChartPtr tgt, std::vector<Expr> imgs, std::optional<std::vector<Expr>> inv = std::nullopt)
        : source(std::move(src)), target(std::move(tgt)), images(std::move(imgs)), inverse(std::move(inv)) {
        if (images.size() != target->dim()) throw Error("chart map needs one image per target coordinate");
        for (std::size_t i = 0; i < images.size(); ++i) {
            require_same_chart(images[i].chart(), source);
            check_image(images[i], target->parity(i), target->name(i));
        }
        if (inverse) {
            if (inverse->size() != source->dim()) throw Error("inverse needs one image per source coordinate");
            for (std::size_t i = 0; i < inverse->size(); ++i) {
                require_same_chart((*inverse)[i].chart(), target);
                check_image((*inverse)[i], source->parity(i), source->name(i));
            }
        }
    }

    static ChartMap identity(const ChartPtr& chart) {
        return ChartMap(chart, chart, coordinates(chart), coordinates(chart));
    }

private:
    static void check_image(const Expr& e, Parity want, const std::string& name) {
        if (e.is_zero()) return;
        auto p = e.parity();
        if (!e.is_function() || !p || !(*p == want))
            throw ParityError("image of '" + name + "' must be a " + want.str() + " function");
    }
};

/// phi^* w for w over the target chart.
inline Expr pullback(const ChartMap& phi, const Expr& w) {
    require_same_chart(w.chart(), phi.target);
    std::vector<Expr> dimg;
    for (const auto& img : phi.images) dimg.push_back(exterior_d(img));
    return substitute(w, phi.images, dimg);
}

/// Expresses a source-chart expression in target coordinates via the inverse.
inline Expr to_target(const ChartMap& phi, const Expr& w) {
    if (!phi.inverse) throw Error("chart map has no declared inverse");
    require_same_chart(w.chart(), phi.source);
    std::vector<Expr> dimg;
    for (const auto& img : *phi.inverse) dimg.push_back(exterior_d(img));
    return substitute(w, *phi.inverse, dimg);
}

/// (phi_* X)^j = X(phi^j) written in target coordinates.
inline VectorField pushforward_vf(const ChartMap& phi, const VectorField& X) {
    if (!phi.inverse) throw Error("pushforward needs a declared inverse");
    require_same_chart(X.chart(), phi.source);
    std::vector<Expr> c;
    for (const auto& img : phi.images) c.push_back(to_target(phi, X(img)));
    return VectorField(phi.target, X.parity(), std::move(c));
}

/// Round-trip check of the declared inverse (both compositions).
inline EqualityReport check_inverse(const ChartMap& phi, const EqualityPolicy& policy = {}) {
    if (!phi.inverse) throw Error("chart map has no declared inverse");
    for (std::size_t i = 0; i < phi.source->dim(); ++i) {
        Expr back = substitute((*phi.inverse)[i], phi.images);
        auto r = equal(back, Expr::coordinate(phi.source, i), policy);
        if (!r) return r;
    }
    EqualityReport last;
    last.equal = true;
    for (std::size_t j = 0; j < phi.target->dim(); ++j) {
        Expr fwd = substitute(phi.images[j], *phi.inverse);
        last = equal(fwd, Expr::coordinate(phi.target, j), policy);
        if (!last) return last;
    }
    return last;
}

} // namespace gdarboux
