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
#include "integrate.hpp"
#include "pfaffian.hpp"

namespace gdarboux {

// ------------------------------------------------------- homogeneous ODE

struct PdeSolution {
    Expr f;
    EqualityReport check;          // d f / d y = g
    std::optional<Degree> degree;  // (sigma, w + w(y)) when g is homogeneous and f confirms it
    std::string warning;
};

/// f = integral of g in the even coordinate y_k from 0, so that df/dy_k = g,
/// f vanishes on y_k = 0 and w(f) = w(g) + w(y_k) for homogeneous g.
inline PdeSolution homog_solve_pde(const Expr& g, std::size_t k, const EqualityPolicy& policy = {}) {
    const ChartPtr& chart = g.chart();
    if (chart->parity(k).is_odd()) throw DomainError("the integration coordinate must be even");
    if (!g.is_function()) throw ParityError("right-hand side must be a function");
    PdeSolution out{integrate_from_zero(g, k), {}, std::nullopt, ""};
    out.check = equal(partial(out.f, k), g, policy);
    if (!out.check.equal) throw NonIntegrable("primitive failed verification");
    WeightVectorField nabla = weight_field_of_chart(chart);
    DegreeReport dg = degree_of(g, nabla, policy);
    if (!dg.homogeneous) {
        out.warning = "right-hand side is not homogeneous; no weight claimed";
        return out;
    }
    Degree want = *dg.degree + Degree{Parity::even(), chart->weight(k)};
    DegreeReport df = degree_of(out.f, nabla, policy);
    if (df.homogeneous && *df.degree == want) out.degree = want;
    else out.warning = "solution is not homogeneous of the expected degree";
    return out;
}

// ------------------------------------------------------- Poincare lemma

namespace detail {

inline VectorField euler_field(const ChartPtr& chart) {
    return VectorField(chart, Parity::even(), coordinates(chart));
}

inline int euler_degree(const Monomial& m) {
    int n = 0;
    for (int e : m.x) n += e;
    for (int e : m.dx) n += e;
    return n;
}

} // namespace detail

/// Radial homotopy K(w) = int_0^1 t^(N-1) i_E w(t x) dt, evaluated termwise:
/// a monomial of total Euler degree N contributes i_E(term) / N. For
/// polynomial forms d K + K d is the identity on positive-degree parts.
inline Expr homotopy_operator(const Expr& w) {
    if (!w.is_polynomial()) throw DomainError("the homotopy operator needs a polynomial form");
    const ChartPtr& chart = w.chart();
    Expr::TermMap scaled_terms;
    for (const auto& [m, c] : w.terms()) {
        int n = detail::euler_degree(m);
        if (n == 0 || m.form_degree() == 0) continue;
        scaled_terms.emplace(m, Coefficient(make_rational(1, n)) * c);
    }
    Expr scaled(chart, std::move(scaled_terms));
    return interior(detail::euler_field(chart), scaled);
}

struct PrimitiveResult {
    Expr alpha;
    std::optional<Degree> form_degree;
    std::optional<Degree> primitive_degree;
};

inline void require_vanishing_at_origin(const VectorField& v) {
    std::vector<double> origin(v.chart()->dim(), 0.0);
    for (const auto& e : v.coeffs())
        if (!e.is_zero() && eval_body(e, origin) != 0.0) throw DomainError("the weight field does not vanish at the origin");
}

/// Homogeneous primitive of a closed polynomial form, vanishing at the origin.
inline PrimitiveResult poincare_primitive(const Expr& w, const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    if (w.is_zero()) return {w, Degree{}, Degree{}};
    if (!w.form_degree() || *w.form_degree() < 1) throw DomainError("primitive needs a form of positive degree");
    if (!w.is_polynomial()) throw DomainError("non-polynomial input");
    if (!exterior_d(w).is_zero()) throw DomainError("form is not closed");
    require_same_chart(w.chart(), nabla.field.chart());
    require_vanishing_at_origin(nabla.field);
    PrimitiveResult r{homotopy_operator(w), std::nullopt, std::nullopt};
    DegreeReport dw = degree_of(w, nabla, policy);
    if (dw.homogeneous) {
        r.form_degree = dw.degree;
        DegreeReport da = degree_of(r.alpha, nabla, policy);
        if (da.homogeneous) r.primitive_degree = da.degree;
    }
    return r;
}

/// Function f with df = beta and f(0) = 0 for a closed 1-form. Polynomial
/// input uses the homotopy; otherwise integrates along the coordinate axes
/// (even coordinates only).
inline Expr path_primitive(const Expr& beta, const EqualityPolicy& policy = {}) {
    const ChartPtr& chart = beta.chart();
    if (beta.is_zero()) return beta;
    if (beta.form_degree() != 1) throw ParityError("path primitive needs a 1-form");
    if (beta.is_polynomial()) return homotopy_operator(beta);
    const Chart& c = *chart;
    for (const auto& [m, co] : beta.terms())
        for (std::size_t i = 0; i < c.dim(); ++i)
            if (c.parity(i).is_odd() && (m.x[i] != 0 || m.dx[i] != 0))
                throw NonIntegrable("non-polynomial primitive involving odd coordinates");
    std::vector<Expr> row = detail::one_form_row(beta);
    Expr f(chart);
    for (std::size_t k = 0; k < c.dim(); ++k) {
        if (row[k].is_zero()) continue;
        std::vector<Expr> img = coordinates(chart);
        for (std::size_t j = k + 1; j < c.dim(); ++j) img[j] = Expr(chart);
        f += integrate_from_zero(substitute(row[k], img), k);
    }
    if (!equal(exterior_d(f), beta, policy).equal) throw NonIntegrable("axis primitive failed verification");
    return f;
}

struct LogPrimitive {
    Coefficient c;
    Expr g;
};

/// For nabla = x d/dx and a closed weight-0 form: w = c dx/x + dg with c
/// constant and g independent of x.
inline LogPrimitive log_primitive(const Expr& w, const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    const ChartPtr& chart = w.chart();
    require_same_chart(chart, nabla.field.chart());
    std::optional<std::size_t> xi;
    for (std::size_t i = 0; i < chart->dim(); ++i) {
        if (nabla.field[i].is_zero()) continue;
        if (xi || !identical(nabla.field[i], Expr::coordinate(chart, i)))
            throw DomainError("the weight field must read x d/dx in this chart");
        xi = i;
    }
    if (!xi || chart->parity(*xi).is_odd()) throw DomainError("the weight field must read x d/dx in this chart");
    if (w.form_degree() != 1) throw ParityError("log primitive needs a 1-form");
    if (!is_zero(exterior_d(w), policy).equal) throw DomainError("form is not closed");
    DegreeReport dw = degree_of(w, nabla, policy);
    if (!dw.homogeneous || dw.degree->weight != 0 || dw.degree->parity.is_odd())
        throw DomainError("form must be homogeneous of degree (even, 0)");
    Expr cexpr = interior(nabla.field, w);
    Coefficient c;
    if (cexpr.is_constant()) {
        c = cexpr.constant_value();
    } else {
        Sampler s(policy.seed);
        std::vector<double> pt = s.draw(*chart).values;
        double v = eval_body(cexpr, pt);
        Coefficient guess(rationalize(v));
        if (!equal(cexpr, Expr::constant(chart, guess), policy).equal) {
            guess = Coefficient::from_double(v);
            if (!equal(cexpr, Expr::constant(chart, guess), policy).equal)
                throw DomainError("i_nabla w is not constant");
        }
        c = guess;
    }
    Expr x = Expr::coordinate(chart, *xi);
    Expr rest = w - c * gdiv(Expr::differential(chart, *xi), x);
    Expr g = path_primitive(rest, policy);
    if (!is_zero(partial(g, *xi), policy).equal) throw DomainError("remainder depends on x");
    return {c, g};
}

// ------------------------------------------------------- normal forms

enum class Variant { contact, contact_log, potential, presymplectic };

inline const char* variant_name(Variant v) {
    switch (v) {
    case Variant::contact: return "contact";
    case Variant::contact_log: return "contact-log";
    case Variant::potential: return "potential";
    case Variant::presymplectic: return "presymplectic";
    }
    return "?";
}

/// Shape of a canonical expression plus the target coordinates playing each
/// role: q[i], p[i] pairs, y[l] with sign eps[l], and z for contact variants.
struct NormalFormSpec {
    Variant variant = Variant::contact;
    int r = 0;
    int s = 0;
    std::vector<int> eps;
    int k = 0;  // remaining coordinates
    std::vector<std::size_t> q, p, y;
    std::optional<std::size_t> z;
};

inline void check_spec(const NormalFormSpec& spec, const Chart& target) {
    if (spec.q.size() != spec.p.size() || static_cast<int>(spec.q.size()) != spec.r)
        throw Error("normal form: pair count mismatch");
    if (spec.y.size() != spec.eps.size() || static_cast<int>(spec.y.size()) != spec.s)
        throw Error("normal form: eps count mismatch");
    for (int e : spec.eps)
        if (e != 1 && e != -1) throw Error("normal form: eps entries must be +1 or -1");
    for (std::size_t l : spec.y)
        if (target.parity(l).is_even()) throw ParityError("normal form: y coordinates must be odd");
    bool needs_z = spec.variant == Variant::contact || spec.variant == Variant::contact_log;
    if (needs_z != spec.z.has_value()) throw Error("normal form: z coordinate required exactly for contact variants");
}

/// Canonical expression of the normal form over the target chart.
inline Expr canonical_form(const NormalFormSpec& spec, const ChartPtr& target) {
    check_spec(spec, *target);
    Expr out(target);
    auto X = [&](std::size_t i) { return Expr::coordinate(target, i); };
    auto D = [&](std::size_t i) { return Expr::differential(target, i); };
    bool two_form = spec.variant == Variant::presymplectic;
    for (int i = 0; i < spec.r; ++i)
        out += two_form ? gmul(D(spec.p[i]), D(spec.q[i])) : gmul(X(spec.p[i]), D(spec.q[i]));
    for (int l = 0; l < spec.s; ++l) {
        Expr t = two_form ? gmul(D(spec.y[l]), D(spec.y[l])) : gmul(X(spec.y[l]), D(spec.y[l]));
        out += Coefficient(static_cast<long>(spec.eps[l])) * t;
    }
    if (spec.variant == Variant::contact) out += D(*spec.z);
    if (spec.variant == Variant::contact_log) out += gdiv(D(*spec.z), X(*spec.z));
    return out;
}

struct CoordinateCheck {
    std::string name;
    DegreeReport degree;
    bool matches_declared = false;
};

struct VerifyReport {
    bool pass = false;
    EqualityReport equality;
    std::optional<Degree> form_degree;
    std::vector<CoordinateCheck> coordinates;
    bool weights_consistent = false;
    std::vector<std::string> problems;
};

/// Three checks: the pullback of the canonical expression equals the form,
/// every new coordinate is homogeneous with its declared degree, and the
/// coordinate weights fit the degree of the form.
inline VerifyReport verify_normal_form(const Expr& form, const ChartMap& phi, const NormalFormSpec& spec,
                                       const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    VerifyReport rep;
    require_same_chart(form.chart(), phi.source);
    const Chart& t = *phi.target;
    rep.equality = equal(pullback(phi, canonical_form(spec, phi.target)), form, policy);
    if (!rep.equality.equal) rep.problems.push_back("pullback of the canonical form differs: " + rep.equality.detail);

    bool coords_ok = true;
    std::vector<std::optional<Weight>> w(t.dim());
    for (std::size_t i = 0; i < t.dim(); ++i) {
        CoordinateCheck cc{t.name(i), degree_of(phi.images[i], nabla, policy), false};
        if (cc.degree.homogeneous) {
            w[i] = cc.degree.degree->weight;
            cc.matches_declared = cc.degree.degree->parity == t.parity(i) && cc.degree.degree->weight == t.weight(i);
        }
        if (!cc.matches_declared) {
            coords_ok = false;
            rep.problems.push_back("coordinate " + t.name(i) +
                                   (cc.degree.homogeneous ? " has weight " + cc.degree.degree->weight.get_str() +
                                                                ", declared " + t.weight(i).get_str()
                                                          : " is not homogeneous"));
        }
        rep.coordinates.push_back(std::move(cc));
    }

    DegreeReport df = degree_of(form, nabla, policy);
    rep.weights_consistent = false;
    if (!df.homogeneous) {
        rep.problems.push_back("form is not homogeneous");
    } else {
        rep.form_degree = df.degree;
        Weight fw = df.degree->weight;
        bool ok = coords_ok;
        auto need = [&](bool cond, const std::string& what) {
            if (!cond) {
                ok = false;
                rep.problems.push_back(what);
            }
        };
        if (ok) {
            for (int i = 0; i < spec.r; ++i)
                need(*w[spec.p[i]] + *w[spec.q[i]] == fw, "w(" + t.name(spec.p[i]) + ") + w(" + t.name(spec.q[i]) + ") differs from w");
            for (int l = 0; l < spec.s; ++l) need(2 * *w[spec.y[l]] == fw, "2 w(" + t.name(spec.y[l]) + ") differs from w");
            if (spec.variant == Variant::contact) need(*w[*spec.z] == fw, "w(z) differs from w");
            if (spec.variant == Variant::contact_log) need(fw == 0, "logarithmic contact form must have weight 0");
        }
        rep.weights_consistent = ok;
    }
    rep.pass = rep.equality.equal && coords_ok && rep.weights_consistent;
    return rep;
}

// ------------------------------------------------------- linear Darboux

struct LinearDarboux {
    ChartMap map;           // new coordinates as linear functions of the old
    NormalFormSpec spec;    // presymplectic variant
    Eigen::MatrixXd basis;  // columns: new coordinate directions in old coordinates
    double residual = 0.0;  // max |coefficient| of pullback(canonical) - omega0
};

namespace detail {

inline Coefficient snap(double v) {
    Rational q = rationalize(v, 1000);
    if (std::abs(q.get_d() - v) <= 1e-14 * std::max(1.0, std::abs(v))) return Coefficient(q);
    return Coefficient::from_double(v);
}

inline double max_coefficient(const Expr& e) {
    double m = 0;
    for (const auto& [mono, c] : e.terms()) m = std::max(m, std::abs(c.to_double()));
    return m;
}

} // namespace detail

/// Linear change of coordinates bringing a constant even 2-form to
/// sum dp_i^dq^i + sum eps_l dy^l^dy^l (eps = +1 block first). The even block
/// uses skew Gram-Schmidt, the odd block a symmetric congruence with pivoting.
inline LinearDarboux linear_darboux(const Expr& omega0, double tol = 1e-9) {
    const ChartPtr& chart = omega0.chart();
    const Chart& c = *chart;
    detail::require_definite(omega0, 2, "constant 2-form");
    if (omega0.parity()->is_odd()) throw ParityError("odd 2-forms are verified, not constructed");
    for (const auto& [m, co] : omega0.terms())
        if (!std::all_of(m.x.begin(), m.x.end(), [](int e) { return e == 0; }) || !m.atoms.empty())
            throw DomainError("linear Darboux needs constant coefficients");
    std::size_t n = c.dim();
    FlatMatrix f = flat_matrix(omega0, std::vector<double>(n, 0.0));
    double scale = std::max(f.m.cwiseAbs().maxCoeff(), 1e-300);
    auto unit = [&](int i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<long>(n));
        v(i) = 1.0;
        return v;
    };
    auto B = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) { return u.dot(f.m * v); };

    // even block
    std::vector<Eigen::VectorXd> rem;
    for (int i : f.even) rem.push_back(unit(i));
    std::vector<Eigen::VectorXd> qs, ps, ev_kernel;
    while (rem.size() >= 2) {
        std::size_t bi = 0, bj = 1;
        double best = 0;
        for (std::size_t i = 0; i < rem.size(); ++i)
            for (std::size_t j = i + 1; j < rem.size(); ++j)
                if (std::abs(B(rem[i], rem[j])) > best) {
                    best = std::abs(B(rem[i], rem[j]));
                    bi = i;
                    bj = j;
                }
        if (best <= tol * scale) break;
        double b = B(rem[bi], rem[bj]);
        Eigen::VectorXd e = b > 0 ? rem[bi] : rem[bj];
        Eigen::VectorXd g = (b > 0 ? rem[bj] : rem[bi]) / std::abs(b);
        rem.erase(rem.begin() + static_cast<long>(bj));
        rem.erase(rem.begin() + static_cast<long>(bi));
        for (auto& w : rem) w = w - B(w, g) * e + B(w, e) * g;
        ps.push_back(e);
        qs.push_back(g);
    }
    ev_kernel = rem;

    // odd block: M restricted there is symmetric; target diag(2 eps)
    rem.clear();
    for (int i : f.odd) rem.push_back(unit(i));
    std::vector<std::pair<int, Eigen::VectorXd>> ys;
    while (!rem.empty()) {
        std::size_t bi = 0;
        double best = 0;
        for (std::size_t i = 0; i < rem.size(); ++i)
            if (std::abs(B(rem[i], rem[i])) > best) {
                best = std::abs(B(rem[i], rem[i]));
                bi = i;
            }
        if (best <= tol * scale) {
            // zero diagonal: combine a pair with a nonzero off-diagonal entry
            std::size_t pi = 0, pj = 0;
            double off = 0;
            for (std::size_t i = 0; i < rem.size(); ++i)
                for (std::size_t j = i + 1; j < rem.size(); ++j)
                    if (std::abs(B(rem[i], rem[j])) > off) {
                        off = std::abs(B(rem[i], rem[j]));
                        pi = i;
                        pj = j;
                    }
            if (off <= tol * scale) break;
            rem[pi] = rem[pi] + rem[pj];
            continue;
        }
        double d = B(rem[bi], rem[bi]);
        Eigen::VectorXd v = rem[bi];
        rem.erase(rem.begin() + static_cast<long>(bi));
        for (auto& w : rem) w = w - (B(w, v) / d) * v;
        ys.push_back({d > 0 ? 1 : -1, v / std::sqrt(std::abs(d) / 2.0)});
    }
    std::stable_sort(ys.begin(), ys.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Eigen::VectorXd> od_kernel = rem;

    // assemble the new chart: q.., p.., u.. | y.., v..
    std::vector<CoordinateDecl> decls;
    std::vector<Eigen::VectorXd> cols;
    NormalFormSpec spec;
    spec.variant = Variant::presymplectic;
    spec.r = static_cast<int>(qs.size());
    spec.s = static_cast<int>(ys.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        spec.q.push_back(decls.size());
        decls.push_back({"q" + std::to_string(i + 1), Parity::even(), Weight(0)});
        cols.push_back(qs[i]);
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        spec.p.push_back(decls.size());
        decls.push_back({"p" + std::to_string(i + 1), Parity::even(), Weight(0)});
        cols.push_back(ps[i]);
    }
    for (std::size_t i = 0; i < ev_kernel.size(); ++i) {
        decls.push_back({"u" + std::to_string(i + 1), Parity::even(), Weight(0)});
        cols.push_back(ev_kernel[i]);
    }
    for (std::size_t l = 0; l < ys.size(); ++l) {
        spec.y.push_back(decls.size());
        spec.eps.push_back(ys[l].first);
        decls.push_back({"y" + std::to_string(l + 1), Parity::odd(), Weight(0)});
        cols.push_back(ys[l].second);
    }
    for (std::size_t l = 0; l < od_kernel.size(); ++l) {
        decls.push_back({"v" + std::to_string(l + 1), Parity::odd(), Weight(0)});
        cols.push_back(od_kernel[l]);
    }
    spec.k = static_cast<int>(ev_kernel.size() + od_kernel.size());
    ChartPtr target = make_chart(decls);
    Eigen::MatrixXd P(static_cast<long>(n), static_cast<long>(n));
    for (std::size_t j = 0; j < n; ++j) P.col(static_cast<long>(j)) = cols[j];
    Eigen::MatrixXd L = P.inverse();
    std::vector<Expr> images, inverse;
    for (std::size_t a = 0; a < n; ++a) {
        Expr e(chart);
        for (std::size_t i = 0; i < n; ++i) {
            Coefficient k = detail::snap(L(static_cast<long>(a), static_cast<long>(i)));
            if (std::abs(k.to_double()) > 1e-15) e += k * Expr::coordinate(chart, i);
        }
        images.push_back(std::move(e));
    }
    for (std::size_t i = 0; i < n; ++i) {
        Expr e(target);
        for (std::size_t a = 0; a < n; ++a) {
            Coefficient k = detail::snap(P(static_cast<long>(i), static_cast<long>(a)));
            if (std::abs(k.to_double()) > 1e-15) e += k * Expr::coordinate(target, a);
        }
        inverse.push_back(std::move(e));
    }
    ChartMap map(chart, target, std::move(images), std::move(inverse));
    double res = detail::max_coefficient(pullback(map, canonical_form(spec, target)) - omega0);
    return {std::move(map), std::move(spec), std::move(P), res};
}

// ------------------------------------------------------- one-form Darboux

/// A chart in which d(alpha) is canonical: sum dp^dq over `pairs` (q, p) plus
/// sum eps dy^dy over odd coordinates.
struct PresympChart {
    ChartMap map;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::pair<std::size_t, int>> eps;
};

enum class DarbouxStatus { constructed, verification_only, obstruction };

inline const char* status_name(DarbouxStatus s) {
    switch (s) {
    case DarbouxStatus::constructed: return "constructed";
    case DarbouxStatus::verification_only: return "verification-only";
    case DarbouxStatus::obstruction: return "obstruction";
    }
    return "?";
}

struct DarbouxResult {
    DarbouxStatus status = DarbouxStatus::verification_only;
    std::optional<ChartMap> map;
    NormalFormSpec spec;
    std::optional<VerifyReport> verification;
    std::optional<Expr> z;  // new contact coordinate, in the old coordinates
    std::optional<Coefficient> v;  // weight of z = exp(f) in the logarithmic case
    std::string detail;
};

namespace detail {

inline NormalFormSpec spec_of(const PresympChart& pc, Variant variant) {
    NormalFormSpec s;
    s.variant = variant;
    for (auto [q, p] : pc.pairs) {
        s.q.push_back(q);
        s.p.push_back(p);
    }
    for (auto [y, e] : pc.eps) {
        s.y.push_back(y);
        s.eps.push_back(e);
    }
    s.r = static_cast<int>(s.q.size());
    s.s = static_cast<int>(s.y.size());
    return s;
}

inline int body_jacobian_rank(const std::vector<Expr>& images, const std::vector<double>& at) {
    std::size_t n = images.size();
    const ChartPtr& src = images.front().chart();
    Eigen::MatrixXd J(static_cast<long>(n), static_cast<long>(src->dim()));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < src->dim(); ++b)
            J(static_cast<long>(a), static_cast<long>(b)) = eval_body(partial(images[a], b), at);
    // odd rows differentiated by odd coordinates give odd derivatives' bodies,
    // which are the even entries of the odd block
    return numeric_rank(J);
}

} // namespace detail

/// Darboux chart for a regular homogeneous 1-form, assembled on top of a
/// chart that makes d(alpha) canonical. The base point is the chart origin.
inline DarbouxResult one_form_darboux(const Expr& alpha, const PresympChart& pc, const WeightVectorField& nabla,
                                      const EqualityPolicy& policy = {}) {
    detail::require_definite(alpha, 1, "Pfaffian form");
    const ChartPtr& chart = alpha.chart();
    require_same_chart(chart, pc.map.source);
    require_same_chart(chart, nabla.field.chart());
    DarbouxResult res;
    NormalFormSpec base = detail::spec_of(pc, Variant::presymplectic);
    Expr dalpha = exterior_d(alpha);
    EqualityReport dcheck = equal(pullback(pc.map, canonical_form(base, pc.map.target)), dalpha, policy);
    if (!dcheck.equal) throw DomainError("supplied chart does not make d(alpha) canonical");
    DegreeReport deg = degree_of(alpha, nabla, policy);
    if (!deg.homogeneous) throw DomainError("alpha is not homogeneous");
    Weight w = deg.degree->weight;

    // nabla(x0) in chi(alpha) at the origin: no homogeneous chart guaranteed
    std::vector<double> origin(chart->dim(), 0.0);
    Eigen::VectorXd nab(static_cast<long>(chart->dim()));
    for (std::size_t i = 0; i < chart->dim(); ++i) nab(static_cast<long>(i)) = eval_body(nabla.field[i], origin);
    bool nabla_zero = nab.norm() == 0.0;
    if (!nabla_zero) {
        FlatMatrix fm = flat_matrix(alpha, origin);
        double ia = std::abs(fm.alpha->dot(nab));
        double ida = (fm.m.transpose() * nab).norm();
        if (ia <= 1e-12 && ida <= 1e-12) {
            res.status = DarbouxStatus::obstruction;
            res.detail = "the weight field lies in the characteristic distribution at the base point; "
                         "no homogeneous Darboux chart guaranteed";
            return res;
        }
    }

    NormalFormSpec pot = detail::spec_of(pc, Variant::potential);
    Expr rest = alpha - pullback(pc.map, canonical_form(pot, pc.map.target));
    if (!is_zero(exterior_d(rest), policy).equal) throw DomainError("alpha minus the canonical potential is not closed");

    ClassifyPolicy cp;
    cp.seed = policy.seed;
    cp.tol = policy.tol;
    ClassificationReport cls = characteristic_class(alpha, cp);
    bool potential = cls.kase == PfaffCase::contained;
    if (potential) {
        if (is_zero(rest, policy).equal) {
            res.status = DarbouxStatus::constructed;
            res.spec = pot;
            res.spec.k = static_cast<int>(chart->dim()) - 2 * res.spec.r - res.spec.s;
            res.map = pc.map;
            res.verification = verify_normal_form(alpha, *res.map, res.spec, nabla, policy);
            return res;
        }
        res.status = DarbouxStatus::verification_only;
        res.spec = pot;
        res.detail = "alpha minus the canonical potential is a nonzero exact form; the supplied chart is not "
                     "adapted and the extended-chart argument does not fix the projected coordinates";
        return res;
    }

    // contact / precontact: dz = rest
    Expr z(chart);
    Variant variant = Variant::contact;
    try {
        bool done = false;
        if (w != 0) {
            Expr cand = Coefficient(Rational(1 / w)) * interior(nabla.field, rest);
            if (equal(exterior_d(cand), rest, policy).equal) {
                z = cand;
                done = true;
            }
        }
        if (!done) {
            Expr f = path_primitive(rest, policy);
            if (w == 0 && !nabla_zero) {
                Expr vf = nabla.field(f);
                double vb = eval_body(vf, origin);
                Coefficient v(rationalize(vb));
                if (!equal(vf, Expr::constant(chart, v), policy).equal) {
                    v = Coefficient::from_double(vb);
                    if (!equal(vf, Expr::constant(chart, v), policy).equal)
                        throw NonIntegrable("nabla(f) is not constant");
                }
                res.v = v;
                z = exp(f);
                variant = Variant::contact_log;
            } else {
                z = f;
            }
        }
    } catch (const NonIntegrable& e) {
        res.status = DarbouxStatus::verification_only;
        res.spec = detail::spec_of(pc, Variant::contact);
        res.detail = std::string("primitive construction failed: ") + e.what();
        return res;
    }
    res.z = z;

    // replace a remaining coordinate of matching parity by z
    const Chart& t = *pc.map.target;
    std::vector<bool> used(t.dim(), false);
    for (auto [q, p] : pc.pairs) used[q] = used[p] = true;
    for (auto [y, e] : pc.eps) used[y] = true;
    Parity zp = *alpha.parity();
    std::optional<std::size_t> slot;
    for (std::size_t i = 0; i < t.dim() && !slot; ++i) {
        if (used[i] || !(t.parity(i) == zp)) continue;
        std::vector<Expr> imgs = pc.map.images;
        imgs[i] = z;
        if (detail::body_jacobian_rank(imgs, origin) == static_cast<int>(t.dim())) slot = i;
    }
    if (!slot) {
        res.status = DarbouxStatus::verification_only;
        res.spec = detail::spec_of(pc, variant);
        res.detail = "no remaining coordinate can be replaced by z at the base point";
        return res;
    }
    std::vector<CoordinateDecl> decls = t.coords();
    DegreeReport dz = degree_of(z, nabla, policy);
    if (dz.homogeneous) decls[*slot].weight = dz.degree->weight;
    ChartPtr target = make_chart(decls, t.box());
    std::vector<Expr> imgs = pc.map.images;
    imgs[*slot] = z;
    res.map = ChartMap(chart, target, imgs);
    res.spec = detail::spec_of(pc, variant);
    res.spec.z = *slot;
    res.spec.k = static_cast<int>(t.dim()) - 2 * res.spec.r - res.spec.s - 1;
    res.status = DarbouxStatus::constructed;
    res.verification = verify_normal_form(alpha, *res.map, res.spec, nabla, policy);
    return res;
}

} // namespace gdarboux
