// Acceptance runner: one line per criterion, exit status 0 only when all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include <gdarboux/gdarboux.hpp>

#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace gdarboux;
using testsupport::Rng;

namespace {

struct Verdict {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

Expr P(const std::string& s, const ChartPtr& c) { return parse_expr(s, c); }

VectorField field(const ChartPtr& c, std::vector<std::string> coeffs) {
    std::vector<Expr> e;
    for (const auto& s : coeffs) e.push_back(P(s, c));
    return VectorField(c, Parity::even(), std::move(e));
}

ChartMap map_of(const ChartPtr& src, const ChartPtr& tgt, std::vector<std::string> images) {
    std::vector<Expr> e;
    for (const auto& s : images) e.push_back(P(s, src));
    return ChartMap(src, tgt, std::move(e));
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

const char* kTheta = "y*(cosh(x*y)+1)*(sinh(x*y)+x*y*cosh(x*y)+1)*d(x) + x^2*y*cosh(x*y)*(cosh(x*y)+1)*d(y)";
const char* kEta =
    "y*(1+sin(z) + cos(x*y)*(1+sin(z)) - sin(x*y)*(exp(z)+x*y*(1+sin(z))))*d(x)"
    " - x*sin(x*y)*(x*y*(sin(z)+1)+exp(z))*d(y) + exp(z)*cos(x*y)*d(z)";

Verdict theta_reproduction() {
    Verdict v;
    auto xy = make_chart({"x", "y"}, {0, 0}, {1, -1});
    auto qp = make_chart({"q", "p"}, {0, 0}, {1, -1});
    auto phi = map_of(xy, qp, {"x*(1+sinh(x*y))", "y*(1+cosh(x*y))"});
    auto r = equal(pullback(phi, P("p*d(q)", qp)), P(kTheta, xy));
    v.require(r.equal, "pullback differs: " + r.detail);
    v.require(r.mode == EqualityMode::exact, "equality was not decided exactly");
    v.detail = v.ok ? "exact" : v.detail;
    return v;
}

Verdict eta_reproduction() {
    Verdict v;
    auto xyz = make_chart({"x", "y", "z"}, {0, 0, 0}, {1, -1, 0});
    auto qpz = make_chart({"q", "p", "zeta"}, {0, 0, 0}, {1, -1, 0});
    auto phi = map_of(xyz, qpz, {"x*(1+cos(x*y))", "y*(1+sin(z))", "exp(z)*cos(x*y)"});
    EqualityPolicy pol{64, 1e-9, 0, true};
    auto r = equal(pullback(phi, P("d(zeta) + p*d(q)", qpz)), P(kEta, xyz), pol);
    v.require(r.equal, "pullback differs: " + r.detail);
    v.require(r.points == 64, "only " + std::to_string(r.points) + " points evaluated");
    if (v.ok) v.detail = "randomized, 64 points, max rel. deviation " + fmt(r.max_error);
    return v;
}

Verdict cylinder() {
    Verdict v;
    auto src = make_chart({"z", "p", "q"}, {0, 0, 0}, {0, 1, -1}, {{-1, 1}, {-0.7, 0.7}, {-0.7, 0.7}});
    Expr alpha = P("d(z) - p*(2+sin(p*q))*d(q)", src);
    auto nabla = weight_field_of_chart(src);
    auto cls = characteristic_class(alpha);
    v.require(cls.kind == PfaffKind::contact, std::string("kind ") + kind_name(cls.kind));
    v.require(cls.cls == 3, "class " + std::to_string(cls.cls));
    auto d = degree_of(alpha, nabla);
    v.require(d.homogeneous && *d.degree == (Degree{Parity::even(), 0}), "degree is not (even, 0)");
    int oracle_points = 0;
    for (const auto& ev : cls.evidence) {
        if (ev.vanishing) continue;
        int o = ev.exact_point ? darboux_class_oracle(alpha, *ev.exact_point) : darboux_class_oracle(alpha, ev.point);
        v.require(o == 3, "oracle class " + std::to_string(o));
        ++oracle_points;
    }
    v.require(oracle_points > 0, "no oracle comparison");

    auto tgt = make_chart({"z", "P", "Q"}, {0, 0, 0}, {0, 1, -1});
    auto phi = map_of(src, tgt, {"z", "-p*(2+sin(p*q))", "q"});
    NormalFormSpec spec;
    spec.variant = Variant::contact;
    spec.r = 1;
    spec.z = 0;
    spec.q = {2};
    spec.p = {1};
    auto rep = verify_normal_form(alpha, phi, spec, nabla);
    v.require(rep.pass, "verify_normal_form failed");
    v.require(rep.weights_consistent, "weights (0, 1, -1) inconsistent");
    if (v.ok) v.detail = "contact, class 3 (oracle at " + std::to_string(oracle_points) + " points), (even, 0), chart verified";
    return v;
}

Verdict liouville_suite() {
    Verdict v;
    auto qp = make_chart({"q", "p"}, {0, 0}, {1, -1});
    auto L = liouville(P("d(p)*d(q)", qp), P("p*d(q)", qp));
    auto r = equal(L, field(qp, {"0", "p"}));
    v.require(r.equal && r.mode == EqualityMode::exact, "Liouville field of p d(q) is not p d/dp exactly");

    auto xy = make_chart({"x", "y"}, {0, 0}, {1, -1});
    Expr theta = P(kTheta, xy);
    auto Lt = liouville(exterior_d(theta), theta);
    auto c = commutes_with(Lt, weight_field_of_chart(xy));
    v.require(c.equal, "Liouville field of theta does not commute with the weight field");
    v.require(c.mode == EqualityMode::exact, "commutation was not decided exactly");
    if (v.ok) v.detail = "both exact";
    return v;
}

Verdict counterexample_suite() {
    Verdict v;
    auto c = make_chart({"q", "p", "z"}, {0, 0, 0}, {0, 0, 0});
    Expr omega = P("d(p)*d(q)", c);
    auto pre = presymplectic_check(omega);
    v.require(pre.presymplectic() && pre.rank == 2, "rank of omega is not constantly 2");
    VectorField dz = field(c, {"0", "0", "1"});
    v.require(interior(dz, omega).is_zero(), "d/dz is not in the kernel");
    for (const auto& s : pre.samples) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(flat_matrix(omega, s.point).m);
        Eigen::MatrixXd k = lu.kernel();
        v.require(k.cols() == 1 && std::abs(k(0, 0)) < 1e-12 && std::abs(k(1, 0)) < 1e-12, "kernel is not spanned by d/dz");
    }
    Expr beta = exterior_d(P("p*sin(q)", c));
    for (const auto& [pattern, coeff] : components(beta))
        v.require(eval_body(coeff, {0.0, 0.0, 0.0}) == 0.0, "d(p sin q) does not vanish at the origin");

    auto qp = make_chart({"q", "p"}, {0, 0}, {0, 0}, {{0.2, 1.2}, {-1, 1}});
    VectorField nt = field(qp, {"-sin(q)", "p*cos(q)"});
    int solutions = 0;
    for (int w : {1, 2})
        for (const char* F : {"1", "p*sin(q)", "3 + (p*sin(q))^2", "(p*sin(q))^3 - 2*p*sin(q)"}) {
            Expr fw = gmul(pow(P("cos(q/2)/sin(q/2)", qp), w), P(F, qp));
            v.require(equal(nt(fw), Coefficient(static_cast<long>(w)) * fw).equal, "f_w fails for w = " + std::to_string(w));
            ++solutions;
        }
    if (v.ok) v.detail = "corank 1, kernel d/dz, " + std::to_string(solutions) + " weight-equation solutions";
    return v;
}

Verdict sign_oracle() {
    Verdict v;
    auto c = make_chart({"x", "xi", "y", "eta"}, {0, 1, 0, 1}, {0, 0, 0, 0});
    std::vector<Generator> gens;
    for (std::size_t i = 0; i < 4; ++i) {
        gens.push_back({Generator::Kind::coordinate, i});
        gens.push_back({Generator::Kind::differential, i});
    }
    int agree = 0, total = 0;
    auto check = [&](const std::vector<Generator>& w) {
        ++total;
        if (identical(from_word(c, Coefficient(1), w), testsupport::koszul_bubble_sort(c, 1, w))) ++agree;
    };
    for (const auto& g1 : gens)
        for (const auto& g2 : gens) {
            check({g1, g2});
            for (const auto& g3 : gens) check({g1, g2, g3});
        }
    v.require(agree == total, std::to_string(total - agree) + " disagreements");
    v.detail = std::to_string(agree) + "/" + std::to_string(total) + " words agree";
    return v;
}

Verdict calculus_properties() {
    Verdict v;
    Rng r(2024);
    const int n = 1000;
    int dd = 0, magic = 0, leibniz = 0, lie_i = 0;
    for (int it = 0; it < n; ++it) {
        auto c = testsupport::random_chart(r, 4, 3);
        Expr w = testsupport::random_mixed(r, c, 3, 3, 3);
        if (exterior_d(exterior_d(w)).is_zero()) ++dd;

        VectorField X = testsupport::random_field(r, c, Parity(r.integer(0, 1)));
        Expr f = testsupport::random_form(r, c, r.integer(1, 3), 3, 3);
        if (identical(lie_derivative(X, f), interior(X, exterior_d(f)) + exterior_d(interior(X, f)))) ++magic;

        Expr a = testsupport::random_monomial(r, c, r.integer(0, 2));
        Expr b = testsupport::random_mixed(r, c, 2, 3, 3);
        int p = *a.form_degree();
        Expr rhs = gmul(exterior_d(a), b) + Coefficient(p % 2 ? -1 : 1) * gmul(a, exterior_d(b));
        if (identical(exterior_d(gmul(a, b)), rhs)) ++leibniz;

        VectorField Y = testsupport::random_field(r, c, Parity(r.integer(0, 1)));
        int sxy = X.parity().value * Y.parity().value;
        Expr comm = lie_derivative(X, interior(Y, f)) - Coefficient(sxy ? -1 : 1) * interior(Y, lie_derivative(X, f));
        if (identical(comm, interior(lie_bracket(X, Y), f))) ++lie_i;
    }
    v.require(dd == n && magic == n && leibniz == n && lie_i == n, "failures");
    v.detail = "d^2 " + std::to_string(dd) + ", magic " + std::to_string(magic) + ", Leibniz " + std::to_string(leibniz) +
               ", [L,i] " + std::to_string(lie_i) + " of " + std::to_string(n);
    return v;
}

Verdict homotopy_suite() {
    Verdict v;
    Rng r(17);
    int identity = 0, prims = 0;
    for (int it = 0; it < 240; ++it) {
        auto c = testsupport::random_chart(r, 3, 3);
        Expr w = testsupport::random_form(r, c, r.integer(0, 2), 3, 4);
        Expr want = w;
        if (w.is_function() && !w.is_zero()) {
            std::vector<double> origin(c->dim(), 0.0);
            want = w - Expr::constant(c, Coefficient(rational_from_double(eval_body(w, origin))));
        }
        bool ok = identical(exterior_d(homotopy_operator(w)) + homotopy_operator(exterior_d(w)), want);
        v.require(ok, "dK + Kd != id on " + to_string(w));
        identity += ok;
    }
    Rng s(23);
    for (int it = 0; it < 300 && prims < 200; ++it) {
        auto c = testsupport::random_chart(s, 3, 2);
        Expr w = exterior_d(testsupport::random_monomial(s, c, s.integer(0, 1), 3));
        if (w.is_zero()) continue;
        auto res = poincare_primitive(w, weight_field_of_chart(c));
        v.require(identical(exterior_d(res.alpha), w), "primitive is wrong for " + to_string(w));
        v.require(res.form_degree && res.primitive_degree && *res.form_degree == *res.primitive_degree,
                  "primitive degree differs for " + to_string(w));
        std::vector<double> origin(c->dim(), 0.0);
        for (const auto& [pattern, coeff] : components(res.alpha))
            v.require(eval_body(coeff, origin) == 0.0, "primitive does not vanish at the centre");
        ++prims;
    }
    v.require(identity >= 200 && prims >= 100, "too few instances");
    if (v.ok) v.detail = std::to_string(identity) + " identities, " + std::to_string(prims) + " homogeneous primitives";
    return v;
}

Verdict linear_darboux_suite() {
    Verdict v;
    Rng r(99);
    auto c = make_chart({"a1", "a2", "a3", "a4", "a5", "a6", "u1", "u2", "u3"}, {0, 0, 0, 0, 0, 0, 1, 1, 1},
                        {0, 0, 0, 0, 0, 0, 0, 0, 0});
    double worst = 0;
    int forms = 0;
    while (forms < 100) {
        Expr w(c);
        int kill = r.integer(0, 2);
        for (int i = kill; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                w += Coefficient(make_rational(r.integer(-4, 4), 2)) * gmul(Expr::differential(c, i), Expr::differential(c, j));
        for (int l = 6; l < 9; ++l)
            for (int m = l; m < 9; ++m)
                w += Coefficient(make_rational(r.integer(-4, 4), 2)) * gmul(Expr::differential(c, l), Expr::differential(c, m));
        if (w.is_zero()) continue;
        ++forms;
        auto res = linear_darboux(w);
        worst = std::max(worst, res.residual);
        FlatMatrix f = flat_matrix(w, std::vector<double>(9, 0.0));
        v.require(2 * res.spec.r == numeric_rank(f.block(false, false)), "even rank mismatch");
        v.require(res.spec.variant == Variant::presymplectic && res.spec.k + 2 * res.spec.r + res.spec.s == 9,
                  "normal form shape");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.block(true, true));
        int pos = 0, neg = 0;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            pos += es.eigenvalues()(i) > 1e-9;
            neg += es.eigenvalues()(i) < -1e-9;
        }
        int epos = static_cast<int>(std::count(res.spec.eps.begin(), res.spec.eps.end(), 1));
        v.require(epos == pos && res.spec.s - epos == neg, "epsilon signature disagrees with eigenvalue signs");
    }
    v.require(worst < 1e-12, "residual " + fmt(worst));
    if (v.ok) v.detail = "100 forms, worst residual " + fmt(worst);
    return v;
}

Verdict classification_oracle() {
    Verdict v;
    Rng r(47);
    int forms = 0, points = 0, tries = 0;
    while (forms < 100 && tries < 1000) {
        ++tries;
        auto c = testsupport::random_chart(r, 5, 0, 2);
        Expr a = testsupport::random_form(r, c, 1, 2, 4) + Expr::differential(c, 0);
        auto rep = characteristic_class(a);
        if (!rep.constant || rep.evidence.size() != 16) continue;
        bool vanishing = false;
        for (const auto& ev : rep.evidence) vanishing |= ev.vanishing;
        if (vanishing) continue;
        ++forms;
        for (const auto& ev : rep.evidence) {
            int o = ev.exact_point ? darboux_class_oracle(a, *ev.exact_point) : darboux_class_oracle(a, ev.point);
            v.require(o == ev.cls && o == rep.cls, "class " + std::to_string(ev.cls) + " vs oracle " + std::to_string(o) + " for " + to_string(a));
            ++points;
        }
    }
    v.require(forms == 100, "only " + std::to_string(forms) + " constant-class forms");
    if (v.ok) v.detail = std::to_string(forms) + " forms, " + std::to_string(points) + " points agree";
    return v;
}

Verdict straightening() {
    Verdict v;
    auto line = make_chart({"x"}, {0}, {0}, {{-3, 3}});
    StraightenParams par;
    par.nodes = 21;
    auto g = straighten_commuting({field(line, {"2 + sin(x)"})}, {0.0}, par);
    auto F = [](double s) { return 2 / std::sqrt(3.0) * std::atan((2 * std::tan(s / 2) + 1) / std::sqrt(3.0)); };
    double quad = 0;
    for (std::size_t n = 0; n < g.points.size(); ++n)
        quad = std::max(quad, std::abs(F(g.points[n][0]) - F(0) - g.times[n][0]));
    v.require(g.certified() && quad < 1e-6, "single field: certified " + fmt(g.max_error) + ", quadrature " + fmt(quad));

    auto c = make_chart({"x", "y", "z"}, {0, 0, 0}, {0, 0, 0}, {{-2, 2}, {-2, 2}, {-2, 2}});
    auto h = straighten_commuting({field(c, {"1", "0", "0"}), field(c, {"0", "1", "cos(y)"})}, {0, 0, 0});
    v.require(h.certified() && h.max_error < 1e-6, "commuting pair: certified error " + fmt(h.max_error));
    if (v.ok) v.detail = "quadrature " + fmt(quad) + ", certified " + fmt(g.max_error) + " and " + fmt(h.max_error);
    return v;
}

Verdict degree_laws() {
    Verdict v;
    Rng r(43);
    int pairs = 0, zeros = 0, monos = 0;
    while (pairs < 500) {
        auto c = testsupport::random_chart(r, 3, 3);
        auto n = weight_field_of_chart(c);
        Expr a = testsupport::random_monomial(r, c, r.integer(0, 2));
        Expr b = testsupport::random_monomial(r, c, r.integer(0, 2));
        auto da = degree_of(a, n), db = degree_of(b, n);
        v.require(da.homogeneous && db.homogeneous, "random monomial is not homogeneous");
        Expr ab = gmul(a, b);
        if (ab.is_zero()) continue;
        auto dab = degree_of(ab, n);
        v.require(dab.homogeneous && *dab.degree == *da.degree + *db.degree, "degree of a product is not additive");
        ++pairs;
    }
    while (monos < 500) {
        auto c = testsupport::random_chart(r, 3, 3);
        Expr f = testsupport::random_monomial(r, c, 0);
        auto df = degree_of(f, weight_field_of_chart(c));
        if (!df.homogeneous || df.degree->weight == 0) continue;
        ++monos;
        std::vector<double> origin(c->dim(), 0.0);
        bool z = eval_body(f, origin) == 0.0;
        v.require(z, "nonzero-weight function " + to_string(f) + " does not vanish at the origin");
        zeros += z;
    }
    if (v.ok) v.detail = std::to_string(pairs) + " products additive, " + std::to_string(zeros) + " functions vanish";
    return v;
}

Verdict cli_determinism() {
    Verdict v;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gdarboux_acceptance";
    fs::create_directories(dir);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    int count = 0;
    for (const auto& entry : fs::directory_iterator(GDARBOUX_MANIFEST_DIR)) {
        if (entry.path().extension() != ".json") continue;
        std::string outs[2];
        for (int k = 0; k < 2; ++k) {
            fs::path out = dir / (entry.path().stem().string() + "." + std::to_string(k) + ".json");
            std::string cmd = std::string(GDARBOUX_CLI) + " run " + entry.path().string() + " -q --seed 11 --json " +
                              out.string() + " > /dev/null 2>&1";
            int rc = std::system(cmd.c_str());
            v.require(WIFEXITED(rc) && WEXITSTATUS(rc) == 0, entry.path().filename().string() + " did not pass");
            outs[k] = slurp(out);
        }
        v.require(!outs[0].empty() && outs[0] == outs[1], entry.path().filename().string() + " differs between runs");
        ++count;
    }
    v.require(count >= 6, "only " + std::to_string(count) + " manifests found");
    if (v.ok) v.detail = std::to_string(count) + " manifests byte-identical";
    return v;
}

struct Criterion {
    int id;
    const char* title;
    double limit;  // seconds; 0 for none
    std::function<Verdict()> run;
};

} // namespace

int main() {
    const std::vector<Criterion> all = {
        {1, "theta reproduction", 1.0, theta_reproduction},
        {2, "eta reproduction", 5.0, eta_reproduction},
        {3, "cylinder example", 2.0, cylinder},
        {4, "Liouville suite", 1.0, liouville_suite},
        {5, "counterexample suite", 2.0, counterexample_suite},
        {6, "sign oracle (2|2)", 0.0, sign_oracle},
        {7, "calculus properties", 60.0, calculus_properties},
        {8, "homotopy suite", 0.0, homotopy_suite},
        {9, "linear Darboux (6|3)", 0.0, linear_darboux_suite},
        {10, "classification vs oracle", 0.0, classification_oracle},
        {11, "straightening", 10.0, straightening},
        {12, "degree laws", 0.0, degree_laws},
        {13, "CLI determinism", 0.0, cli_determinism},
    };
    int failed = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.ok = false;
            v.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (v.ok && c.limit > 0 && secs >= c.limit) {
            v.ok = false;
            v.detail = "runtime " + fmt(secs) + " s exceeds " + fmt(c.limit) + " s";
        }
        failed += !v.ok;
        std::printf("%s  %2d  %-26s %7.3f s  %s\n", v.ok ? "PASS" : "FAIL", c.id, c.title, secs, v.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed ? 1 : 0;
}
