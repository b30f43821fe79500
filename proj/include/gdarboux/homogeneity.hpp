#pragma once

#include <complex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cartan.hpp"
#include "eval.hpp"
#include "linalg.hpp"

namespace gdarboux {

/// Even vector field used to measure weights. `canonical` means its
/// coefficients are exactly w_i x^i in its own chart.
struct WeightVectorField {
    VectorField field;
    bool canonical = false;
};

/// nabla = sum_i w_i x^i d/dx^i for the declared weights.
inline WeightVectorField weight_field_of_chart(const ChartPtr& chart) {
    std::vector<Expr> c;
    for (std::size_t i = 0; i < chart->dim(); ++i)
        c.push_back(Coefficient(chart->weight(i)) * Expr::coordinate(chart, i));
    return {VectorField(chart, Parity::even(), std::move(c)), true};
}

/// Exact check that nabla reads sum_i w_i x^i d/dx^i in `chart`.
inline bool verify_weight_chart(const VectorField& nabla, const ChartPtr& chart) {
    if (!same_chart(nabla.chart(), chart) || nabla.parity().is_odd()) return false;
    for (std::size_t i = 0; i < chart->dim(); ++i) {
        Expr want = Coefficient(chart->weight(i)) * Expr::coordinate(nabla.chart(), i);
        if (!identical(nabla[i], want)) return false;
    }
    return true;
}

inline WeightVectorField as_weight_field(const VectorField& v) {
    if (v.parity().is_odd()) throw ParityError("a weight vector field must be even");
    return {v, verify_weight_chart(v, v.chart())};
}

// ----------------------------------------------------------- linearization

enum class LinearizationVerdict { diagonalizable, not_diagonalizable, nonvanishing };

inline const char* verdict_name(LinearizationVerdict v) {
    switch (v) {
    case LinearizationVerdict::diagonalizable: return "diagonalizable";
    case LinearizationVerdict::not_diagonalizable: return "not-diagonalizable";
    case LinearizationVerdict::nonvanishing: return "nonvanishing";
    }
    return "?";
}

struct Linearization {
    Eigen::MatrixXd even_block;  // d_j nabla^i at the point, i, j even
    Eigen::MatrixXd odd_block;   // i, j odd
    std::vector<std::complex<double>> eigenvalues;
    LinearizationVerdict verdict = LinearizationVerdict::diagonalizable;
};

namespace detail {

inline bool real_diagonalizable(const Eigen::MatrixXd& m, std::vector<std::complex<double>>& eig) {
    if (m.rows() == 0) return true;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    auto ev = es.eigenvalues();
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i) eig.push_back(ev(i));
    for (int i = 0; i < ev.size(); ++i)
        if (std::abs(ev(i).imag()) > 1e-9 * scale) return false;
    std::vector<bool> used(static_cast<std::size_t>(ev.size()), false);
    const double cluster = 1e-7 * scale;
    for (int i = 0; i < ev.size(); ++i) {
        if (used[static_cast<std::size_t>(i)]) continue;
        double lambda = ev(i).real();
        int mult = 0;
        for (int j = 0; j < ev.size(); ++j)
            if (!used[static_cast<std::size_t>(j)] && std::abs(ev(j).real() - lambda) <= cluster) {
                used[static_cast<std::size_t>(j)] = true;
                ++mult;
            }
        Eigen::MatrixXd shifted = m - lambda * Eigen::MatrixXd::Identity(m.rows(), m.cols());
        // geometric multiplicity = n - rank(M - lambda I)
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted);
        int rank = 0;
        for (int k = 0; k < svd.singularValues().size(); ++k)
            if (svd.singularValues()(k) > 1e-7 * scale) ++rank;
        if (m.rows() - rank != mult) return false;
    }
    return true;
}

} // namespace detail

/// Jacobian of nabla at a body point, split into even and odd blocks, with a
/// real-diagonalizability verdict (a necessary condition for nabla to be a
/// weight vector field at one of its zeros).
inline Linearization linearization_at_zero(const VectorField& nabla, const std::vector<double>& point) {
    if (nabla.parity().is_odd()) throw ParityError("linearization needs an even vector field");
    const Chart& c = *nabla.chart();
    if (point.size() != c.dim()) throw Error("point has the wrong dimension");
    Linearization L;
    std::vector<std::size_t> ev, od;
    for (std::size_t i = 0; i < c.dim(); ++i) (c.parity(i).is_even() ? ev : od).push_back(i);
    for (std::size_t i : ev)
        if (std::abs(eval_body(nabla[i], point)) > 1e-12) {
            L.verdict = LinearizationVerdict::nonvanishing;
            break;
        }
    auto block = [&](const std::vector<std::size_t>& idx) {
        Eigen::MatrixXd m(idx.size(), idx.size());
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b)
                m(static_cast<long>(a), static_cast<long>(b)) = eval_body(partial(nabla[idx[a]], idx[b]), point);
        return m;
    };
    L.even_block = block(ev);
    L.odd_block = block(od);
    if (L.verdict == LinearizationVerdict::nonvanishing) return L;
    bool ok = detail::real_diagonalizable(L.even_block, L.eigenvalues);
    ok = detail::real_diagonalizable(L.odd_block, L.eigenvalues) && ok;
    L.verdict = ok ? LinearizationVerdict::diagonalizable : LinearizationVerdict::not_diagonalizable;
    return L;
}

// ----------------------------------------------------------------- degrees

struct DegreeReport {
    bool homogeneous = false;
    std::optional<Degree> degree;
    std::vector<Expr> residual;  // L_nabla T - w T per component, for the best candidate w
    EqualityReport evidence;
    std::string detail;
};

namespace detail {

/// Weight of a monomial read off the coordinate weights (atoms of weight-0
/// arguments count 0; reciprocals count minus the weight of their argument).
inline std::optional<Rational> naive_weight(const Chart& c, const Monomial& m) {
    Rational w(0);
    for (std::size_t i = 0; i < c.dim(); ++i) w += c.weight(i) * (m.x[i] + m.dx[i]);
    for (const auto& [atom, e] : m.atoms) {
        std::optional<Rational> aw;
        for (const auto& [am, ac] : atom.arg->terms()) {
            auto t = naive_weight(c, am);
            if (!t || (aw && *aw != *t)) return std::nullopt;
            aw = t;
        }
        if (!aw) continue;
        if (atom.func == Func::inv) w -= *aw * e;
        else if (sgn(*aw) != 0) return std::nullopt;
    }
    return w;
}

/// Finds w with L = w T (componentwise), trying structural candidates, zero,
/// and a sampled least-squares estimate.
inline DegreeReport solve_weight(const std::vector<Expr>& L, const std::vector<Expr>& T, Parity parity,
                                 bool canonical, const EqualityPolicy& policy) {
    DegreeReport rep;
    const ChartPtr& chart = T.front().chart();
    bool all_zero = std::all_of(T.begin(), T.end(), [](const Expr& e) { return e.is_zero(); });
    if (all_zero) {
        rep.homogeneous = true;
        rep.degree = Degree{parity, Weight(0)};
        rep.residual = std::vector<Expr>(T.size(), Expr(chart));
        rep.evidence.equal = true;
        rep.detail = "zero is homogeneous of every weight";
        return rep;
    }
    std::vector<Rational> cands;
    auto add = [&](const Rational& w) {
        if (std::find(cands.begin(), cands.end(), w) == cands.end()) cands.push_back(w);
    };
    if (canonical)
        for (const auto& t : T)
            for (const auto& [m, c] : t.terms())
                if (auto w = naive_weight(*chart, m)) add(*w);
    // sampled estimate <L,T>/<T,T>
    std::optional<Rational> estimate;
    {
        Sampler s(policy.seed ^ 0x5eed);
        double lt = 0, tt = 0;
        int used = 0;
        for (int k = 0; k < 64 && used < 8; ++k) {
            SamplePoint p = s.draw(*chart);
            try {
                Evaluator<double> ev(chart, p.values);
                for (std::size_t i = 0; i < T.size(); ++i) {
                    auto lc = ev.components(L[i]);
                    auto tc = ev.components(T[i]);
                    for (const auto& [pat, tv] : tc) {
                        auto it = lc.find(pat);
                        for (std::size_t b = 0; b < tv.size(); ++b) {
                            tt += tv[b] * tv[b];
                            if (it != lc.end()) lt += it->second[b] * tv[b];
                        }
                    }
                }
                ++used;
            } catch (const EvaluationError&) {
            }
        }
        if (tt > 0 && std::isfinite(lt / tt)) estimate = rationalize(lt / tt, 1000);
    }
    if (estimate) add(*estimate);
    add(Rational(0));
    std::optional<Rational> best;
    for (const auto& w : cands) {
        EqualityReport all;
        all.equal = true;
        for (std::size_t i = 0; i < T.size() && all.equal; ++i) {
            EqualityReport r = equal(L[i], Coefficient(w) * T[i], policy);
            if (r.mode == EqualityMode::randomized) all.mode = r.mode;
            all.points = std::max(all.points, r.points);
            all.max_error = std::max(all.max_error, r.max_error);
            if (!r.equal) all = r;
        }
        if (all.equal) {
            rep.homogeneous = true;
            rep.degree = Degree{parity, w};
            rep.evidence = all;
            best = w;
            break;
        }
        if (!best || (estimate && w == *estimate)) {
            best = w;
            rep.evidence = all;
        }
    }
    for (std::size_t i = 0; i < T.size(); ++i) rep.residual.push_back(L[i] - Coefficient(*best) * T[i]);
    if (!rep.homogeneous) rep.detail = "no weight w with L_nabla T = w T";
    return rep;
}

} // namespace detail

/// Degree of a form/function under nabla, by solving L_nabla T = w T.
inline DegreeReport degree_of(const Expr& T, const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    require_same_chart(T.chart(), nabla.field.chart());
    auto p = T.parity();
    if (!p) {
        DegreeReport rep;
        rep.residual = {T};
        rep.detail = "mixed parity";
        return rep;
    }
    Expr L = lie_derivative(nabla.field, T);
    return detail::solve_weight({L}, {T}, *p, nabla.canonical, policy);
}

/// Degree of a vector field: [nabla, X] = w X. Structural candidates use the
/// coefficient weight minus the weight of the coordinate.
inline DegreeReport degree_of(const VectorField& X, const WeightVectorField& nabla, const EqualityPolicy& policy = {}) {
    require_same_chart(X.chart(), nabla.field.chart());
    VectorField L = lie_bracket(nabla.field, X);
    if (!nabla.canonical) return detail::solve_weight(L.coeffs(), X.coeffs(), X.parity(), false, policy);
    // shift each component by -w_i so naive monomial weights give field weights
    const ChartPtr& chart = X.chart();
    std::vector<Expr> T = X.coeffs();
    DegreeReport rep = detail::solve_weight(L.coeffs(), T, X.parity(), false, policy);
    if (rep.homogeneous) return rep;
    std::vector<Rational> cands;
    for (std::size_t i = 0; i < T.size(); ++i)
        for (const auto& [m, c] : T[i].terms())
            if (auto w = detail::naive_weight(*chart, m)) {
                Rational v = *w - chart->weight(i);
                if (std::find(cands.begin(), cands.end(), v) == cands.end()) cands.push_back(v);
            }
    for (const auto& w : cands) {
        bool ok = true;
        EqualityReport ev;
        ev.equal = true;
        for (std::size_t i = 0; i < T.size() && ok; ++i) {
            EqualityReport r = equal(L[i], Coefficient(w) * T[i], policy);
            if (r.mode == EqualityMode::randomized) ev.mode = r.mode;
            ok = r.equal;
        }
        if (ok) {
            rep.homogeneous = true;
            rep.degree = Degree{X.parity(), w};
            rep.evidence = ev;
            rep.residual.clear();
            for (std::size_t i = 0; i < T.size(); ++i) rep.residual.push_back(L[i] - Coefficient(w) * T[i]);
            rep.detail.clear();
            return rep;
        }
    }
    return rep;
}

// ------------------------------------------------------------------- lifts

struct Lift {
    ChartPtr chart;
    WeightVectorField field;
};

/// Adapted chart (x^a, dot_x^a) with dot_x^a of the same parity and weight,
/// and nabla^T = sum_a w_a (x^a d/dx^a + dot_x^a d/ddot_x^a).
inline Lift tangent_lift(const WeightVectorField& nabla) {
    const ChartPtr& c = nabla.field.chart();
    if (!nabla.canonical || !verify_weight_chart(nabla.field, c))
        throw Error("tangent lift needs a canonical weight vector field");
    std::vector<CoordinateDecl> d = c->coords();
    for (const auto& x : c->coords()) d.push_back({"dot_" + x.name, x.parity, x.weight});
    std::vector<Interval> box = c->box();
    box.insert(box.end(), c->box().begin(), c->box().end());
    ChartPtr lifted = make_chart(std::move(d), std::move(box));
    return {lifted, weight_field_of_chart(lifted)};
}

/// Adapted chart (x^a, p_a) with p_a of the parity of x^a and weight -w_a,
/// and nabla^* = sum_a w_a (x^a d/dx^a - p_a d/dp_a).
inline Lift cotangent_lift(const WeightVectorField& nabla) {
    const ChartPtr& c = nabla.field.chart();
    if (!nabla.canonical || !verify_weight_chart(nabla.field, c))
        throw Error("cotangent lift needs a canonical weight vector field");
    std::vector<CoordinateDecl> d = c->coords();
    for (const auto& x : c->coords()) d.push_back({"p_" + x.name, x.parity, Weight(-x.weight)});
    std::vector<Interval> box = c->box();
    box.insert(box.end(), c->box().begin(), c->box().end());
    ChartPtr lifted = make_chart(std::move(d), std::move(box));
    return {lifted, weight_field_of_chart(lifted)};
}

/// Canonical 1-form sum_a p_a d(x^a) on a cotangent-lift chart.
inline Expr canonical_one_form(const Lift& cot) {
    const ChartPtr& c = cot.chart;
    std::size_t n = c->dim() / 2;
    Expr a(c);
    for (std::size_t i = 0; i < n; ++i) a += gmul(Expr::coordinate(c, n + i), Expr::differential(c, i));
    return a;
}

// ------------------------------------------------------------ distributions

struct Distribution {
    ChartPtr chart;
    std::vector<VectorField> generators;
    std::size_t rank = 0;

    Distribution(ChartPtr c, std::vector<VectorField> g, std::optional<std::size_t> declared = std::nullopt)
        : chart(std::move(c)), generators(std::move(g)), rank(declared.value_or(generators.size())) {
        for (const auto& X : generators) require_same_chart(X.chart(), chart);
    }
};

struct SpanPolicy {
    int samples = 16;
    std::uint64_t seed = 0;
    double tol = 1e-9;
};

struct SpanReport {
    bool result = false;
    bool degenerate = false;  // generators lost rank at a sample point
    std::string mode;          // "exact" (rational points) or "numeric"
    int points = 0;
    double max_residual = 0.0;
    std::optional<std::vector<double>> witness;
    std::string detail;
};

namespace detail {

inline bool polynomial_field(const VectorField& X) {
    return std::all_of(X.coeffs().begin(), X.coeffs().end(), [](const Expr& e) { return e.is_polynomial(); });
}

} // namespace detail

/// Whether every candidate field lies pointwise (at body points) in the span
/// of the distribution's generators, over sampled points of the chart box.
inline SpanReport span_contains(const Distribution& D, const std::vector<VectorField>& cands, const SpanPolicy& pol = {}) {
    SpanReport rep;
    const Chart& c = *D.chart;
    std::size_t n = c.dim();
    bool exact = std::all_of(D.generators.begin(), D.generators.end(), detail::polynomial_field) &&
                 std::all_of(cands.begin(), cands.end(), detail::polynomial_field);
    rep.mode = exact ? "exact" : "numeric";
    Sampler s(pol.seed);
    int attempts = 0;
    rep.result = true;
    while (rep.points < pol.samples && attempts < 20 * pol.samples) {
        ++attempts;
        if (exact) {
            std::vector<Rational> pt = s.draw_rational(c);
            RationalMatrix rows;
            for (const auto& X : D.generators) {
                std::vector<Rational> r;
                for (std::size_t i = 0; i < n; ++i) r.push_back(eval_exact_body(X[i], pt));
                rows.push_back(std::move(r));
            }
            std::vector<double> wit;
            for (const auto& v : pt) wit.push_back(v.get_d());
            ++rep.points;
            if (exact_rank(rows) != static_cast<int>(D.rank)) {
                rep.result = false;
                rep.degenerate = true;
                rep.witness = wit;
                rep.detail = "generators drop rank at a sample point";
                return rep;
            }
            for (const auto& Y : cands) {
                std::vector<Rational> r;
                for (std::size_t i = 0; i < n; ++i) r.push_back(eval_exact_body(Y[i], pt));
                if (!exact_in_row_space(rows, r)) {
                    rep.result = false;
                    rep.witness = wit;
                    rep.max_residual = 1.0;
                    rep.detail = "field leaves the span";
                    return rep;
                }
            }
        } else {
            SamplePoint p = s.draw(c);
            Eigen::MatrixXd G(static_cast<long>(n), static_cast<long>(D.generators.size()));
            std::vector<Eigen::VectorXd> ys;
            try {
                for (std::size_t k = 0; k < D.generators.size(); ++k)
                    for (std::size_t i = 0; i < n; ++i)
                        G(static_cast<long>(i), static_cast<long>(k)) = eval_body(D.generators[k][i], p.values);
                for (const auto& Y : cands) {
                    Eigen::VectorXd y(static_cast<long>(n));
                    for (std::size_t i = 0; i < n; ++i) y(static_cast<long>(i)) = eval_body(Y[i], p.values);
                    ys.push_back(y);
                }
            } catch (const EvaluationError&) {
                continue;
            }
            ++rep.points;
            if (numeric_rank(G, pol.tol) != static_cast<int>(D.rank)) {
                rep.result = false;
                rep.degenerate = true;
                rep.witness = p.values;
                rep.detail = "generators drop rank at a sample point";
                return rep;
            }
            for (const auto& y : ys) {
                double res = span_residual(G, y, pol.tol);
                rep.max_residual = std::max(rep.max_residual, res);
                if (res > pol.tol) {
                    rep.result = false;
                    rep.witness = p.values;
                    rep.detail = "field leaves the span";
                    return rep;
                }
            }
        }
    }
    if (rep.points == 0) {
        rep.result = false;
        rep.detail = "no evaluable sample points";
    }
    return rep;
}

/// L_nabla X_i in D for all generators.
inline SpanReport distribution_homogeneous(const Distribution& D, const WeightVectorField& nabla, const SpanPolicy& pol = {}) {
    std::vector<VectorField> lie;
    for (const auto& X : D.generators) lie.push_back(lie_bracket(nabla.field, X));
    return span_contains(D, lie, pol);
}

/// All pairwise brackets (including [X, X] for odd X) lie in D.
inline SpanReport involutive_check(const Distribution& D, const SpanPolicy& pol = {}) {
    std::vector<VectorField> br;
    for (std::size_t i = 0; i < D.generators.size(); ++i)
        for (std::size_t j = i; j < D.generators.size(); ++j) {
            if (i == j && D.generators[i].parity().is_even()) continue;
            br.push_back(lie_bracket(D.generators[i], D.generators[j]));
        }
    return span_contains(D, br, pol);
}

} // namespace gdarboux
