#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cartan.hpp"
#include "homogeneity.hpp"
#include "linalg.hpp"
#include "solve.hpp"

namespace gdarboux {

// ------------------------------------------------------------ flat matrix

/// Symbolic entries of the flat map of a 2-form: m[a][b] is the coefficient of
/// d(x^b) in i_{d/dx^a} omega. For a 1-form input omega = d(alpha) and
/// alpha_row[b] is the coefficient of d(x^b) in alpha.
struct FlatSymbols {
    ChartPtr chart;
    Expr omega;
    ExprMatrix m;
    std::optional<std::vector<Expr>> alpha_row;
};

namespace detail {

inline std::vector<Expr> one_form_row(const Expr& beta) {
    const ChartPtr& c = beta.chart();
    std::vector<Expr> row(c->dim(), Expr(c));
    for (const auto& [pattern, f] : components(beta))
        for (std::size_t b = 0; b < pattern.size(); ++b)
            if (pattern[b] == 1) row[b] = f;
    return row;
}

inline void require_definite(const Expr& w, int degree, const char* what) {
    if (!w.is_zero() && w.form_degree() != degree)
        throw ParityError(std::string(what) + " must have form-degree " + std::to_string(degree));
    if (!w.parity()) throw ParityError(std::string(what) + " must have definite parity");
}

} // namespace detail

inline FlatSymbols flat_symbols(const Expr& form) {
    FlatSymbols s{form.chart(), Expr(form.chart()), {}, std::nullopt};
    if (form.is_zero() || form.form_degree() == 1) {
        detail::require_definite(form, 1, "Pfaffian form");
        s.omega = exterior_d(form);
        s.alpha_row = detail::one_form_row(form);
    } else {
        detail::require_definite(form, 2, "2-form");
        s.omega = form;
    }
    for (std::size_t a = 0; a < s.chart->dim(); ++a)
        s.m.push_back(detail::one_form_row(interior(VectorField::coordinate(s.chart, a), s.omega)));
    return s;
}

/// Body evaluation of the flat map at one point; rows and columns keep the
/// chart order, with index lists for the even and odd blocks.
struct FlatMatrix {
    std::vector<double> point;
    Eigen::MatrixXd m;
    std::optional<Eigen::VectorXd> alpha;
    std::vector<int> even, odd;

    Eigen::MatrixXd block(bool row_odd, bool col_odd) const {
        const auto& r = row_odd ? odd : even;
        const auto& c = col_odd ? odd : even;
        Eigen::MatrixXd b(r.size(), c.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t j = 0; j < c.size(); ++j) b(i, j) = m(r[i], c[j]);
        return b;
    }
};

inline FlatMatrix flat_matrix(const FlatSymbols& s, const std::vector<double>& point) {
    const Chart& c = *s.chart;
    FlatMatrix f;
    f.point = point;
    for (std::size_t i = 0; i < c.dim(); ++i) (c.parity(i).is_odd() ? f.odd : f.even).push_back(static_cast<int>(i));
    Evaluator<double> ev(s.chart, point, true);
    long n = static_cast<long>(c.dim());
    f.m.resize(n, n);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) f.m(a, b) = ev.function(s.m[a][b]).body();
    if (s.alpha_row) {
        Eigen::VectorXd v(n);
        for (long b = 0; b < n; ++b) v(b) = ev.function((*s.alpha_row)[b]).body();
        f.alpha = v;
    }
    return f;
}

inline FlatMatrix flat_matrix(const Expr& form, const std::vector<double>& point) {
    return flat_matrix(flat_symbols(form), point);
}

// ------------------------------------------------------------ sample points

struct ClassifyPolicy {
    int samples = 16;
    std::uint64_t seed = 0;
    double tol = 1e-9;
    bool include_center = true;  // the box center counts as the first sample
};

namespace detail {

/// Sample points in both representations; the exact one is used when the data
/// are exact Laurent polynomials.
struct DualPoint {
    std::vector<double> values;
    std::vector<Rational> exact;
};

class PointStream {
public:
    PointStream(const Chart& c, const ClassifyPolicy& pol) : chart_(c), sampler_(pol.seed), center_(pol.include_center) {}

    DualPoint next() {
        DualPoint p;
        if (center_) {
            center_ = false;
            for (std::size_t i = 0; i < chart_.dim(); ++i) {
                double mid = chart_.parity(i).is_even() ? 0.5 * (chart_.box()[i].lo + chart_.box()[i].hi) : 0.0;
                p.exact.push_back(rational_from_double(mid));
                p.values.push_back(mid);
            }
            return p;
        }
        p.exact = sampler_.draw_rational(chart_);
        for (const auto& v : p.exact) p.values.push_back(v.get_d());
        return p;
    }

private:
    const Chart& chart_;
    Sampler sampler_;
    bool center_;
};

inline RationalMatrix exact_values(const ExprMatrix& m, const std::vector<Rational>& pt) {
    RationalMatrix out;
    for (const auto& row : m) {
        std::vector<Rational> r;
        for (const auto& e : row) r.push_back(eval_exact_body(e, pt));
        out.push_back(std::move(r));
    }
    return out;
}

inline bool exact_data(const FlatSymbols& s) {
    for (const auto& row : s.m)
        for (const auto& e : row)
            if (!e.is_exact_laurent()) return false;
    if (s.alpha_row)
        for (const auto& e : *s.alpha_row)
            if (!e.is_exact_laurent()) return false;
    return true;
}

inline bool all_zero(const std::vector<Rational>& v) {
    return std::all_of(v.begin(), v.end(), [](const Rational& x) { return sgn(x) == 0; });
}

inline RationalMatrix sub_block(const RationalMatrix& m, const std::vector<int>& r, const std::vector<int>& c) {
    RationalMatrix b;
    for (int i : r) {
        std::vector<Rational> row;
        for (int j : c) row.push_back(m[i][j]);
        b.push_back(std::move(row));
    }
    return b;
}

} // namespace detail

// ---------------------------------------------------------- classification

enum class PfaffCase { closed, transversal, contained };
enum class PfaffKind { closed, contact, symplectic_potential, precontact, presymplectic_potential, irregular };

inline const char* case_name(PfaffCase c) {
    switch (c) {
    case PfaffCase::closed: return "closed";
    case PfaffCase::transversal: return "transversal";
    case PfaffCase::contained: return "contained";
    }
    return "?";
}

inline const char* kind_name(PfaffKind k) {
    switch (k) {
    case PfaffKind::closed: return "closed";
    case PfaffKind::contact: return "contact";
    case PfaffKind::symplectic_potential: return "symplectic-potential";
    case PfaffKind::precontact: return "precontact";
    case PfaffKind::presymplectic_potential: return "presymplectic-potential";
    case PfaffKind::irregular: return "irregular";
    }
    return "?";
}

struct PointEvidence {
    std::vector<double> point;
    std::optional<std::vector<Rational>> exact_point;
    bool vanishing = false;  // alpha vanishes here: reported, not classified
    int rank = 0;            // body rank of the flat map
    int cls = 0;
    PfaffCase kase = PfaffCase::closed;
    double residual = 0.0;   // least-squares residual of alpha against Im (numeric mode)
};

struct ClassificationReport {
    int cls = 0;
    PfaffCase kase = PfaffCase::closed;
    PfaffKind kind = PfaffKind::irregular;
    std::string mode;  // "exact" or "numeric"
    int dim = 0;
    bool constant = true;
    std::vector<PointEvidence> evidence;
    std::optional<std::vector<double>> witness;  // a point where the class or case changed
    std::string detail;

    int classified_points() const {
        return static_cast<int>(std::count_if(evidence.begin(), evidence.end(), [](const PointEvidence& e) { return !e.vanishing; }));
    }
};

/// Class of a Pfaffian form: corank of its characteristic distribution,
/// decided pointwise at body points. alpha counts as vanishing at a point when
/// its body row is zero and the flat map gives nothing to classify against
/// (always on a purely even chart).
inline ClassificationReport characteristic_class(const Expr& alpha, const ClassifyPolicy& pol = {}) {
    detail::require_definite(alpha, 1, "Pfaffian form");
    FlatSymbols s = flat_symbols(alpha);
    const Chart& c = *s.chart;
    ClassificationReport rep;
    rep.dim = static_cast<int>(c.dim());
    bool closed = s.omega.is_zero() || is_zero(s.omega, EqualityPolicy{32, pol.tol, pol.seed, false}).equal;
    bool exact = detail::exact_data(s);
    rep.mode = exact ? "exact" : "numeric";
    detail::PointStream stream(c, pol);
    int attempts = 0;
    while (static_cast<int>(rep.evidence.size()) < pol.samples && attempts < 20 * pol.samples) {
        ++attempts;
        detail::DualPoint p = stream.next();
        PointEvidence ev;
        ev.point = p.values;
        bool row_zero;
        try {
            if (exact) {
                ev.exact_point = p.exact;
                RationalMatrix m = detail::exact_values(s.m, p.exact);
                std::vector<Rational> a;
                for (const auto& e : *s.alpha_row) a.push_back(eval_exact_body(e, p.exact));
                ev.rank = exact_rank(m);
                row_zero = detail::all_zero(a);
                ev.kase = exact_in_row_space(m, a) ? PfaffCase::contained : PfaffCase::transversal;
            } else {
                FlatMatrix f = flat_matrix(s, p.values);
                if (!f.m.allFinite() || !f.alpha->allFinite()) continue;
                ev.rank = numeric_rank(f.m, pol.tol);
                row_zero = f.alpha->norm() == 0.0;
                ev.residual = ev.rank == 0 ? (row_zero ? 0.0 : 1.0) : span_residual(f.m.transpose(), *f.alpha, pol.tol);
                ev.kase = ev.residual <= pol.tol ? PfaffCase::contained : PfaffCase::transversal;
            }
        } catch (const EvaluationError&) {
            continue;
        }
        if (row_zero && (c.odd_dim() == 0 || ev.rank == 0)) {
            ev.vanishing = true;
            rep.evidence.push_back(std::move(ev));
            continue;
        }
        if (closed) {
            ev.kase = PfaffCase::closed;
            ev.cls = 1;
        } else {
            ev.cls = ev.kase == PfaffCase::contained ? ev.rank : ev.rank + 1;
        }
        rep.evidence.push_back(std::move(ev));
    }
    const PointEvidence* first = nullptr;
    for (const auto& ev : rep.evidence) {
        if (ev.vanishing) continue;
        if (!first) {
            first = &ev;
            continue;
        }
        if (ev.cls != first->cls || ev.kase != first->kase) {
            rep.constant = false;
            if (!rep.witness) rep.witness = ev.point;
        }
    }
    if (!first) throw DomainError("the form vanishes at every sample point");
    rep.cls = first->cls;
    rep.kase = first->kase;
    if (!rep.constant) {
        rep.kind = PfaffKind::irregular;
        rep.detail = "class or case changes across the sample set";
    } else if (rep.kase == PfaffCase::closed) {
        rep.kind = PfaffKind::closed;
    } else if (rep.cls == rep.dim) {
        rep.kind = rep.kase == PfaffCase::transversal ? PfaffKind::contact : PfaffKind::symplectic_potential;
    } else {
        rep.kind = rep.kase == PfaffCase::transversal ? PfaffKind::precontact : PfaffKind::presymplectic_potential;
    }
    return rep;
}

// ------------------------------------------------------------ presymplectic

struct RankSample {
    std::vector<double> point;
    int rank = 0;
    int even_rank = 0;
    int odd_rank = 0;
};

struct PresymplecticReport {
    bool closed = false;
    Expr residual;  // d(omega)
    bool constant = false;
    int rank = 0;
    int even_rank = 0;
    int odd_rank = 0;
    bool split = false;  // even/odd ranks meaningful (even omega)
    std::string mode;
    std::vector<RankSample> samples;
    std::optional<std::vector<double>> witness;
    std::string detail;

    bool presymplectic() const { return closed && constant; }
    bool symplectic(std::size_t dim) const { return presymplectic() && static_cast<std::size_t>(rank) == dim; }
};

inline PresymplecticReport presymplectic_check(const Expr& omega, const ClassifyPolicy& pol = {}) {
    detail::require_definite(omega, 2, "presymplectic form");
    FlatSymbols s = flat_symbols(omega);
    const Chart& c = *s.chart;
    PresymplecticReport rep{false, exterior_d(omega), false, 0, 0, 0, false, "", {}, std::nullopt, ""};
    rep.closed = rep.residual.is_zero() || is_zero(rep.residual, EqualityPolicy{32, pol.tol, pol.seed, false}).equal;
    rep.split = omega.parity()->is_even();
    bool exact = detail::exact_data(s);
    rep.mode = exact ? "exact" : "numeric";
    std::vector<int> ev_idx, od_idx;
    for (std::size_t i = 0; i < c.dim(); ++i) (c.parity(i).is_odd() ? od_idx : ev_idx).push_back(static_cast<int>(i));
    detail::PointStream stream(c, pol);
    int attempts = 0;
    while (static_cast<int>(rep.samples.size()) < pol.samples && attempts < 20 * pol.samples) {
        ++attempts;
        detail::DualPoint p = stream.next();
        RankSample rs;
        rs.point = p.values;
        try {
            if (exact) {
                RationalMatrix m = detail::exact_values(s.m, p.exact);
                rs.rank = exact_rank(m);
                rs.even_rank = exact_rank(detail::sub_block(m, ev_idx, ev_idx));
                rs.odd_rank = exact_rank(detail::sub_block(m, od_idx, od_idx));
            } else {
                FlatMatrix f = flat_matrix(s, p.values);
                if (!f.m.allFinite()) continue;
                rs.rank = numeric_rank(f.m, pol.tol);
                rs.even_rank = numeric_rank(f.block(false, false), pol.tol);
                rs.odd_rank = numeric_rank(f.block(true, true), pol.tol);
            }
        } catch (const EvaluationError&) {
            continue;
        }
        rep.samples.push_back(std::move(rs));
    }
    if (rep.samples.empty()) throw DomainError("no evaluable sample points");
    const RankSample& first = rep.samples.front();
    rep.rank = first.rank;
    rep.even_rank = first.even_rank;
    rep.odd_rank = first.odd_rank;
    rep.constant = true;
    for (const auto& rs : rep.samples)
        if (rs.rank != first.rank || rs.even_rank != first.even_rank) {
            rep.constant = false;
            rep.witness = rs.point;
            rep.detail = "rank " + std::to_string(first.rank) + " at the first sample but " + std::to_string(rs.rank) +
                         " at the witness";
            break;
        }
    if (!rep.closed) rep.detail = "form is not closed";
    return rep;
}

// ---------------------------------------------------------- Reeb / Liouville

namespace detail {

/// First evaluable sample of the box, used to choose pivots.
inline std::vector<double> reference_point(const ExprMatrix& a, std::uint64_t seed) {
    const Chart& c = *a.front().front().chart();
    Sampler s(seed);
    for (int k = 0; k < 64; ++k) {
        SamplePoint p = s.draw(c);
        try {
            for (const auto& row : a)
                for (const auto& e : row)
                    if (!std::isfinite(eval_body(e, p.values))) throw EvaluationError("non-finite");
            return p.values;
        } catch (const EvaluationError&) {
        }
    }
    throw DomainError("no evaluable reference point");
}

inline VectorField field_from(const ChartPtr& chart, Parity parity, std::vector<Expr> coeffs) {
    return VectorField(chart, parity, std::move(coeffs));
}

} // namespace detail

struct ReebField {
    VectorField field;
    EqualityReport normalization;  // i_R alpha = 1
    EqualityReport kernel;         // i_R d(alpha) = 0
    bool verified() const { return normalization.equal && kernel.equal; }
};

/// Reeb field of a contact form: the unique R with i_R alpha = 1 and
/// i_R d(alpha) = 0, solved symbolically and then verified.
inline ReebField reeb(const Expr& alpha, const EqualityPolicy& policy = {}) {
    detail::require_definite(alpha, 1, "contact form");
    const ChartPtr& chart = alpha.chart();
    Expr dalpha = exterior_d(alpha);
    std::size_t n = chart->dim();
    ExprMatrix a;
    for (std::size_t b = 0; b < n; ++b) {
        VectorField e = VectorField::coordinate(chart, b);
        std::vector<Expr> row{interior(e, alpha)};
        auto rest = detail::one_form_row(interior(e, dalpha));
        row.insert(row.end(), rest.begin(), rest.end());
        a.push_back(std::move(row));
    }
    std::vector<Expr> rhs(n + 1, Expr(chart));
    rhs[0] = Expr::constant(chart, Coefficient(1));
    std::vector<Expr> x = solve_left(a, rhs, detail::reference_point(a, policy.seed), policy);
    VectorField R = detail::field_from(chart, *alpha.parity(), std::move(x));
    ReebField out{R, equal(interior(R, alpha), rhs[0], policy), is_zero(interior(R, dalpha), policy)};
    if (!out.verified()) throw SingularSystem("Reeb system solution failed verification");
    return out;
}

/// Liouville field of (omega, alpha) with d(alpha) = omega: i_X omega = alpha.
inline VectorField liouville(const Expr& omega, const Expr& alpha, const EqualityPolicy& policy = {}) {
    detail::require_definite(omega, 2, "symplectic form");
    detail::require_definite(alpha, 1, "potential");
    require_same_chart(omega.chart(), alpha.chart());
    if (!equal(exterior_d(alpha), omega, policy).equal) throw DomainError("d(alpha) differs from omega");
    FlatSymbols s = flat_symbols(omega);
    std::vector<Expr> rhs = detail::one_form_row(alpha);
    std::vector<Expr> x = solve_left(s.m, rhs, detail::reference_point(s.m, policy.seed), policy);
    Parity par = *alpha.parity() + *omega.parity();
    VectorField X = detail::field_from(s.chart, par, std::move(x));
    if (!equal(interior(X, omega), alpha, policy).equal) throw SingularSystem("Liouville solution failed verification");
    return X;
}

/// [nabla, X] = 0 for an ambient weight field.
inline EqualityReport commutes_with(const VectorField& X, const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    return equal(lie_bracket(nabla.field, X), VectorField::zero(X.chart(), X.parity()), policy);
}

/// Generators of chi(alpha) = ker alpha intersected with ker d(alpha), from
/// the symbolic left kernel of [i alpha | flat(d alpha)].
inline std::vector<VectorField> characteristic_generators(const Expr& alpha, const EqualityPolicy& policy = {}) {
    detail::require_definite(alpha, 1, "Pfaffian form");
    const ChartPtr& chart = alpha.chart();
    Expr dalpha = exterior_d(alpha);
    ExprMatrix a;
    for (std::size_t b = 0; b < chart->dim(); ++b) {
        VectorField e = VectorField::coordinate(chart, b);
        std::vector<Expr> row{interior(e, alpha)};
        auto rest = detail::one_form_row(interior(e, dalpha));
        row.insert(row.end(), rest.begin(), rest.end());
        a.push_back(std::move(row));
    }
    std::vector<double> ref = detail::reference_point(a, policy.seed);
    std::vector<VectorField> out;
    LeftKernel ker = left_kernel(a, ref, policy);
    for (std::size_t k = 0; k < ker.generators.size(); ++k)
        out.push_back(detail::field_from(chart, chart->parity(ker.free_rows[k]), std::move(ker.generators[k])));
    return out;
}

// ---------------------------------------------------------- wedge oracle

namespace detail {

template <class T>
bool form_vanishes_at(const Expr& w, const std::vector<T>& point, double tol) {
    if (w.is_zero()) return true;
    Evaluator<T> ev(w.chart(), point, true);
    std::map<std::vector<int>, T> val;
    std::map<std::vector<int>, double> mag;
    for (const auto& [m, c] : w.terms()) {
        T t = ev.term(m, c).body();
        val[m.dx] += t;
        if constexpr (std::is_same_v<T, double>) mag[m.dx] += std::abs(t);
    }
    for (const auto& [pattern, v] : val) {
        if constexpr (std::is_same_v<T, double>) {
            if (std::abs(v) > tol * std::max(mag[pattern], 1e-300)) return false;
        } else {
            if (sgn(v) != 0) return false;
        }
    }
    return true;
}

template <class T>
int wedge_class(const Expr& alpha, const std::vector<T>& point, double tol) {
    const Chart& c = *alpha.chart();
    if (c.odd_dim() != 0) throw DomainError("the wedge criterion is only defined on purely even charts");
    detail::require_definite(alpha, 1, "Pfaffian form");
    if (form_vanishes_at(alpha, point, tol)) throw DomainError("the form vanishes at the point");
    Expr da = exterior_d(alpha);
    Expr power = Expr::constant(alpha.chart(), Coefficient(1));  // (d alpha)^s
    int s = 0;
    while (true) {
        Expr next = gmul(power, da);
        Expr a_next = gmul(alpha, next);
        if (form_vanishes_at(a_next, point, tol)) {
            return form_vanishes_at(next, point, tol) ? 2 * s + 1 : 2 * s + 2;
        }
        power = std::move(next);
        ++s;
    }
}

} // namespace detail

/// Classical class from wedge powers: 2s+1 when alpha^(d alpha)^s != 0 and
/// (d alpha)^(s+1) = 0, otherwise 2s+2.
inline int darboux_class_oracle(const Expr& alpha, const std::vector<double>& point, double tol = 1e-9) {
    return detail::wedge_class(alpha, point, tol);
}

inline int darboux_class_oracle(const Expr& alpha, const std::vector<Rational>& point) {
    return detail::wedge_class(alpha, point, 0.0);
}

} // namespace gdarboux
