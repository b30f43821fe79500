#pragma once

#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cartan.hpp"
#include "linalg.hpp"

namespace gdarboux {

/// Body of an even function on a purely even chart, compiled once for fast
/// repeated evaluation in flow integration.
class BodyFunction {
public:
    explicit BodyFunction(const Expr& e) {
        const Chart& c = *e.chart();
        for (const auto& [m, coeff] : e.terms()) {
            Term t;
            t.c = coeff.to_double();
            for (std::size_t i = 0; i < c.dim(); ++i) {
                if (m.dx[i] != 0) throw ParityError("compiled evaluation needs a function");
                if (m.x[i] == 0) continue;
                if (c.parity(i).is_odd()) throw ParityError("compiled evaluation needs a purely even chart");
                t.powers.push_back({i, m.x[i]});
            }
            for (const auto& [atom, p] : m.atoms) t.atoms.push_back({atom.func, std::make_shared<BodyFunction>(*atom.arg), p});
            terms_.push_back(std::move(t));
        }
    }

    double operator()(const std::vector<double>& x) const {
        double s = 0;
        for (const Term& t : terms_) {
            double v = t.c;
            for (auto [i, e] : t.powers) v *= e == 1 ? x[i] : std::pow(x[i], e);
            for (const auto& a : t.atoms) v *= std::pow(apply(a.func, (*a.arg)(x)), a.power);
            s += v;
        }
        return s;
    }

private:
    struct AtomCall {
        Func func;
        std::shared_ptr<BodyFunction> arg;
        int power;
    };
    struct Term {
        double c = 0;
        std::vector<std::pair<std::size_t, int>> powers;
        std::vector<AtomCall> atoms;
    };

    static double apply(Func f, double u) {
        switch (f) {
        case Func::sin: return std::sin(u);
        case Func::cos: return std::cos(u);
        case Func::exp: return std::exp(u);
        case Func::log:
            if (!(u > 0)) throw EvaluationError("log of a nonpositive body");
            return std::log(u);
        case Func::sinh: return std::sinh(u);
        case Func::cosh: return std::cosh(u);
        case Func::inv:
            if (u == 0) throw EvaluationError("division by a zero body");
            return 1.0 / u;
        }
        return 0;
    }

    std::vector<Term> terms_;
};

struct StraightenParams {
    int nodes = 5;         // per axis
    double extent = 0.5;   // grid half-width in the new coordinates
    double step = 1e-3;    // RK4 step
    double delta = 1e-4;   // central-difference step for certification
    double tol = 1e-6;     // certification bound
};

/// Sampled straightening chart y -> x = Psi(y). Psi composes the flows of the
/// fields (first k new coordinates) with a linear slice through the base
/// spanned by complementary coordinate directions (remaining ones).
struct StraighteningGrid {
    std::vector<std::string> names;
    std::vector<double> base;
    std::vector<std::size_t> complement;     // old coordinate index for each slice axis
    std::vector<double> steps;               // grid spacing per new axis
    std::vector<std::vector<double>> times;  // new coordinates of each node
    std::vector<std::vector<double>> points; // old coordinates of each node
    std::vector<Eigen::MatrixXd> jacobians;  // dPsi/dy at each node, central differences
    std::size_t fields = 0;
    double max_error = 0;                    // max |dPsi/dy_i - X_i(Psi)| over nodes and fields
    double tol = 0;

    bool certified() const { return max_error < tol; }

    std::string csv() const {
        std::ostringstream os;
        os << std::setprecision(17);
        os << "# base=";
        for (std::size_t i = 0; i < base.size(); ++i) os << (i ? " " : "") << base[i];
        os << " step=";
        for (std::size_t i = 0; i < steps.size(); ++i) os << (i ? " " : "") << steps[i];
        os << "\n";
        for (std::size_t i = 0; i < names.size(); ++i) os << names[i] << ",";
        for (std::size_t i = 0; i < names.size(); ++i) os << "y" << i + 1 << (i + 1 < names.size() ? "," : "\n");
        for (std::size_t n = 0; n < points.size(); ++n) {
            for (double v : points[n]) os << v << ",";
            for (std::size_t i = 0; i < times[n].size(); ++i) os << times[n][i] << (i + 1 < times[n].size() ? "," : "\n");
        }
        return os.str();
    }
};

namespace detail {

class FlowIntegrator {
public:
    FlowIntegrator(const std::vector<VectorField>& fields, const Chart& chart, double step)
        : box_(chart.box()), step_(step) {
        for (const auto& X : fields) {
            std::vector<BodyFunction> comp;
            for (const auto& e : X.coeffs()) comp.emplace_back(e);
            fields_.push_back(std::move(comp));
        }
    }

    std::vector<double> velocity(std::size_t i, const std::vector<double>& x) const {
        std::vector<double> v(x.size());
        for (std::size_t a = 0; a < x.size(); ++a) v[a] = fields_[i][a](x);
        return v;
    }

    void flow(std::size_t i, double t, std::vector<double>& x) const {
        if (t == 0) return;
        long n = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / step_)));
        double h = t / static_cast<double>(n);
        std::size_t d = x.size();
        std::vector<double> tmp(d);
        auto axpy = [&](const std::vector<double>& k, double s) {
            for (std::size_t a = 0; a < d; ++a) tmp[a] = x[a] + s * k[a];
            return tmp;
        };
        for (long s = 0; s < n; ++s) {
            auto k1 = velocity(i, x);
            auto k2 = velocity(i, axpy(k1, h / 2));
            auto k3 = velocity(i, axpy(k2, h / 2));
            auto k4 = velocity(i, axpy(k3, h));
            for (std::size_t a = 0; a < d; ++a) x[a] += h / 6 * (k1[a] + 2 * k2[a] + 2 * k3[a] + k4[a]);
            check(x);
        }
    }

    void check(const std::vector<double>& x) const {
        for (std::size_t a = 0; a < x.size(); ++a)
            if (!(x[a] >= box_[a].lo && x[a] <= box_[a].hi))
                throw DomainError("flow leaves the chart box; reduce the grid extent");
    }

private:
    std::vector<std::vector<BodyFunction>> fields_;
    std::vector<Interval> box_;
    double step_;
};

} // namespace detail

/// Numeric straightening of pairwise commuting, independent vector fields on
/// a purely even chart around `base`.
inline StraighteningGrid straighten_commuting(const std::vector<VectorField>& fields, const std::vector<double>& base,
                                              const StraightenParams& par = {}, const EqualityPolicy& policy = {}) {
    if (fields.empty()) throw DomainError("no fields to straighten");
    const ChartPtr& chart = fields.front().chart();
    const Chart& c = *chart;
    if (!c.purely_even()) throw DomainError("numeric straightening needs a purely even chart");
    if (base.size() != c.dim()) throw DomainError("base point has the wrong dimension");
    if (fields.size() > c.dim()) throw DomainError("more fields than dimensions");
    for (const auto& X : fields) {
        require_same_chart(X.chart(), chart);
        if (X.parity().is_odd()) throw ParityError("numeric straightening needs even fields");
    }
    for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t j = i + 1; j < fields.size(); ++j) {
            VectorField br = lie_bracket(fields[i], fields[j]);
            for (const auto& e : br.coeffs())
                if (!is_zero(e, policy).equal) throw DomainError("fields do not commute");
        }
    if (par.nodes < 1 || !(par.extent >= 0) || !(par.step > 0) || !(par.delta > 0))
        throw DomainError("invalid grid parameters");

    detail::FlowIntegrator flow(fields, c, par.step);
    std::size_t n = c.dim(), k = fields.size();
    flow.check(base);

    // complementary coordinate directions, chosen greedily for independence
    Eigen::MatrixXd frame(static_cast<long>(n), 0);
    auto append = [&](const Eigen::VectorXd& v) {
        Eigen::MatrixXd f2(static_cast<long>(n), frame.cols() + 1);
        f2 << frame, v;
        if (numeric_rank(f2) <= frame.cols()) return false;
        frame = f2;
        return true;
    };
    for (std::size_t i = 0; i < k; ++i) {
        auto v = flow.velocity(i, base);
        if (!append(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<long>(n))))
            throw SingularSystem("fields are dependent at the base point");
    }
    StraighteningGrid g;
    for (std::size_t a = 0; a < n && g.complement.size() < n - k; ++a)
        if (append(Eigen::VectorXd::Unit(static_cast<long>(n), static_cast<long>(a)))) g.complement.push_back(a);

    auto psi = [&](const std::vector<double>& y) {
        std::vector<double> x = base;
        for (std::size_t j = 0; j < g.complement.size(); ++j) x[g.complement[j]] += y[k + j];
        flow.check(x);
        for (std::size_t i = k; i-- > 0;) flow.flow(i, y[i], x);
        return x;
    };

    g.names.reserve(n);
    for (std::size_t a = 0; a < n; ++a) g.names.push_back(c.name(a));
    g.base = base;
    g.fields = k;
    g.tol = par.tol;
    double h = par.nodes > 1 ? 2 * par.extent / (par.nodes - 1) : 0.0;
    g.steps.assign(n, h);

    std::size_t total = 1;
    for (std::size_t a = 0; a < n; ++a) total *= static_cast<std::size_t>(par.nodes);
    for (std::size_t node = 0; node < total; ++node) {
        std::vector<double> y(n);
        std::size_t rest = node;
        for (std::size_t a = n; a-- > 0;) {
            int i = static_cast<int>(rest % static_cast<std::size_t>(par.nodes));
            rest /= static_cast<std::size_t>(par.nodes);
            y[a] = par.nodes > 1 ? -par.extent + i * h : 0.0;
        }
        std::vector<double> x = psi(y);
        Eigen::MatrixXd J(static_cast<long>(n), static_cast<long>(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> yp = y, ym = y;
            yp[i] += par.delta;
            ym[i] -= par.delta;
            auto xp = psi(yp), xm = psi(ym);
            for (std::size_t a = 0; a < n; ++a)
                J(static_cast<long>(a), static_cast<long>(i)) = (xp[a] - xm[a]) / (2 * par.delta);
            if (i < k) {
                auto v = flow.velocity(i, x);
                for (std::size_t a = 0; a < n; ++a)
                    g.max_error = std::max(g.max_error, std::abs(J(static_cast<long>(a), static_cast<long>(i)) - v[a]));
            }
        }
        if (numeric_rank(J) < static_cast<int>(n)) throw SingularSystem("straightening Jacobian is singular on the grid");
        g.times.push_back(std::move(y));
        g.points.push_back(std::move(x));
        g.jacobians.push_back(std::move(J));
    }
    return g;
}

} // namespace gdarboux
