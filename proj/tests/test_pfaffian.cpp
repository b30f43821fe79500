#include <gtest/gtest.h>

#include <gdarboux/parse.hpp>
#include <gdarboux/pfaffian.hpp>

#include "support/random.hpp"

using namespace gdarboux;
using testsupport::Rng;

namespace {

Expr P(const std::string& s, const ChartPtr& c) { return parse_expr(s, c); }

VectorField field(const ChartPtr& c, std::vector<std::string> coeffs, Parity p = Parity::even()) {
    std::vector<Expr> e;
    for (const auto& s : coeffs) e.push_back(P(s, c));
    return VectorField(c, p, std::move(e));
}

ChartPtr zpq() { return make_chart({"z", "p", "q"}, {0, 0, 0}, {0, 1, -1}); }
ChartPtr xy() { return make_chart({"x", "y"}, {0, 0}, {1, -1}); }

const char* kCylinder = "d(z) - p*(2+sin(p*q))*d(q)";
const char* kTheta = "y*(cosh(x*y)+1)*(sinh(x*y)+x*y*cosh(x*y)+1)*d(x) + x^2*y*cosh(x*y)*(cosh(x*y)+1)*d(y)";
const char* kEta =
    "y*(1+sin(z) + cos(x*y)*(1+sin(z)) - sin(x*y)*(exp(z)+x*y*(1+sin(z))))*d(x)"
    " - x*sin(x*y)*(x*y*(sin(z)+1)+exp(z))*d(y) + exp(z)*cos(x*y)*d(z)";

} // namespace

TEST(FlatMatrix, Examples) {
    auto c = zpq();
    FlatMatrix f = flat_matrix(P("d(p)*d(q)", c), {0.3, 0.2, -0.4});
    EXPECT_EQ(numeric_rank(f.m), 2);
    Eigen::Vector3d dz(1, 0, 0);
    EXPECT_LT((f.m.transpose() * dz).norm(), 1e-15);  // kernel spanned by d/dz
    EXPECT_FALSE(f.alpha.has_value());

    FlatMatrix g = flat_matrix(P("d(z)", c), {0.1, 0.2, 0.3});
    EXPECT_EQ(g.m.norm(), 0.0);
    ASSERT_TRUE(g.alpha.has_value());
    EXPECT_EQ(*g.alpha, Eigen::Vector3d(1, 0, 0));

    FlatMatrix h = flat_matrix(P(kCylinder, c), {0, 0, 0});
    EXPECT_EQ(numeric_rank(h.m), 2);
    EXPECT_GT(span_residual(h.m.transpose(), *h.alpha), 0.5);  // transversal
}

TEST(FlatMatrix, BlockSymmetry) {
    Rng r(41);
    for (int it = 0; it < 100; ++it) {
        auto c = testsupport::random_chart(r, 3, 3);
        Expr w = testsupport::random_with_parity(r, c, 2, Parity::even(), 2, 4);
        if (w.is_zero()) continue;
        std::vector<double> pt;
        for (std::size_t i = 0; i < c->dim(); ++i) pt.push_back(r.real(-1, 1));
        FlatMatrix f = flat_matrix(w, pt);
        Eigen::MatrixXd ee = f.block(false, false), oo = f.block(true, true);
        EXPECT_LT((ee + ee.transpose()).norm(), 1e-12);
        EXPECT_LT((oo - oo.transpose()).norm(), 1e-12);
        EXPECT_EQ(f.block(false, true).norm(), 0.0);
        EXPECT_EQ(f.block(true, false).norm(), 0.0);
    }
}

TEST(CharacteristicClass, Examples) {
    auto c = zpq();
    auto cyl = characteristic_class(P(kCylinder, c));
    EXPECT_EQ(cyl.cls, 3);
    EXPECT_EQ(cyl.kind, PfaffKind::contact);
    EXPECT_EQ(cyl.mode, "numeric");
    EXPECT_EQ(cyl.classified_points(), 16);

    auto theta = characteristic_class(P(kTheta, xy()));
    EXPECT_EQ(theta.cls, 2);
    EXPECT_EQ(theta.kase, PfaffCase::contained);
    EXPECT_EQ(theta.kind, PfaffKind::symplectic_potential);

    auto dz = characteristic_class(P("d(z)", c));
    EXPECT_EQ(dz.cls, 1);
    EXPECT_EQ(dz.kind, PfaffKind::closed);
    EXPECT_EQ(dz.mode, "exact");

    // p d(q) on R^3: vanishes at the center, presymplectic potential elsewhere
    auto pdq = characteristic_class(P("p*d(q)", c));
    EXPECT_TRUE(pdq.evidence.front().vanishing);
    EXPECT_EQ(pdq.cls, 2);
    EXPECT_EQ(pdq.kind, PfaffKind::presymplectic_potential);

    auto five = make_chart({"z", "p", "q", "u", "v"}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
    auto pre = characteristic_class(P("d(z) + p*d(q)", five));
    EXPECT_EQ(pre.cls, 3);
    EXPECT_EQ(pre.kind, PfaffKind::precontact);

    // class 1 at the center (p = 0), class 3 elsewhere
    auto mixed = characteristic_class(P("d(z) + p^2*d(q)", c));
    EXPECT_EQ(mixed.kind, PfaffKind::irregular);
    EXPECT_TRUE(mixed.witness.has_value());
}

TEST(CharacteristicClass, SuperCharts) {
    auto c = make_chart({"z", "xi"}, {0, 1}, {0, 0});
    auto contact = characteristic_class(P("d(z) + xi*d(xi)", c));
    EXPECT_EQ(contact.cls, 2);
    EXPECT_EQ(contact.kind, PfaffKind::contact);
    auto odd = make_chart({"xi"}, {1}, {0});
    auto pot = characteristic_class(P("xi*d(xi)", odd));
    EXPECT_FALSE(pot.evidence.front().vanishing);
    EXPECT_EQ(pot.cls, 1);
    EXPECT_EQ(pot.kind, PfaffKind::symplectic_potential);
    EXPECT_THROW(characteristic_class(P("d(z) + d(xi)", c)), ParityError);
    EXPECT_THROW(characteristic_class(P("z*d(z)*d(xi)", c)), ParityError);
}

TEST(WedgeOracle, Examples) {
    auto c = zpq();
    Expr cyl = P(kCylinder, c);
    EXPECT_EQ(darboux_class_oracle(cyl, std::vector<double>{0, 0, 0}), 3);
    EXPECT_EQ(darboux_class_oracle(cyl, std::vector<double>{0.5, -0.7, 0.9}), 3);
    EXPECT_EQ(darboux_class_oracle(P("d(z)", c), std::vector<double>{0.1, 0.2, 0.3}), 1);
    auto qp = make_chart({"q", "p"}, {0, 0}, {0, 0});
    EXPECT_EQ(darboux_class_oracle(P("p*d(q)", qp), std::vector<Rational>{Rational(1, 3), Rational(1, 2)}), 2);
    EXPECT_THROW(darboux_class_oracle(P("p*d(q)", qp), std::vector<double>{0.3, 0.0}), DomainError);
    auto s = make_chart({"z", "xi"}, {0, 1}, {0, 0});
    EXPECT_THROW(darboux_class_oracle(P("d(z)", s), std::vector<double>{0, 0}), DomainError);
}

TEST(Presymplectic, Examples) {
    auto c = zpq();
    auto r = presymplectic_check(P("d(p)*d(q)", c));
    EXPECT_TRUE(r.closed);
    EXPECT_TRUE(r.constant);
    EXPECT_EQ(r.rank, 2);
    EXPECT_EQ(r.even_rank, 2);
    EXPECT_EQ(r.odd_rank, 0);

    auto drop = presymplectic_check(P("p*d(p)*d(q)", c));
    EXPECT_TRUE(drop.closed);
    EXPECT_FALSE(drop.constant);
    EXPECT_EQ(drop.samples.front().rank, 0);  // center, p = 0
    ASSERT_TRUE(drop.witness.has_value());
    EXPECT_NE((*drop.witness)[1], 0.0);

    auto odd = make_chart({"xi"}, {1}, {0});
    for (const char* w : {"d(xi)^2", "-d(xi)^2"}) {
        auto o = presymplectic_check(P(w, odd));
        EXPECT_TRUE(o.presymplectic());
        EXPECT_EQ(o.odd_rank, 1);
        EXPECT_EQ(o.even_rank, 0);
        EXPECT_TRUE(o.symplectic(1));
    }

    auto open = presymplectic_check(P("z*d(p)*d(q)", c));
    EXPECT_FALSE(open.closed);
    EXPECT_TRUE(identical(open.residual, P("d(z)*d(p)*d(q)", c)));
}

TEST(Reeb, Examples) {
    auto c = zpq();
    auto canon = reeb(P("d(z) + p*d(q)", c));
    EXPECT_TRUE(equal(canon.field, VectorField::coordinate(c, "z")).equal);
    auto cyl = reeb(P(kCylinder, c));
    EXPECT_TRUE(equal(cyl.field, VectorField::coordinate(c, "z")).equal);
    EXPECT_TRUE(cyl.verified());

    auto xyz = make_chart({"x", "y", "z"}, {0, 0, 0}, {1, -1, 0});
    auto eta = reeb(P(kEta, xyz));
    EXPECT_TRUE(eta.verified());
    EXPECT_EQ(eta.normalization.mode, EqualityMode::randomized);

    EXPECT_THROW(reeb(P("p*d(q)", c)), SingularSystem);
}

TEST(Reeb, Homogeneity) {
    auto c = make_chart({"z", "p", "q"}, {0, 0, 0}, {2, 1, 1});
    auto nabla = weight_field_of_chart(c);
    Expr a = P("d(z) + p*d(q) + q^2/p*d(p)", c);
    auto da = degree_of(a, nabla);
    ASSERT_TRUE(da.homogeneous);
    EXPECT_EQ(da.degree->weight, Rational(2));
    auto R = reeb(a);
    auto dr = degree_of(R.field, nabla);
    ASSERT_TRUE(dr.homogeneous);
    EXPECT_EQ(dr.degree->weight, Rational(-2));
    EXPECT_TRUE(dr.degree->parity.is_even());

    auto cy = zpq();
    auto dc = degree_of(reeb(P(kCylinder, cy)).field, weight_field_of_chart(cy));
    EXPECT_TRUE(dc.homogeneous);
    EXPECT_EQ(dc.degree->weight, Rational(0));
}

TEST(Liouville, Examples) {
    auto c = make_chart({"q", "p"}, {0, 0}, {1, -1});
    EXPECT_TRUE(equal(liouville(P("d(p)*d(q)", c), P("p*d(q)", c)), field(c, {"0", "p"})).equal);
    EXPECT_TRUE(equal(liouville(P("d(p)*d(q)", c), P("(p*d(q) - q*d(p))/2", c)), field(c, {"q/2", "p/2"})).equal);
    VectorField L = liouville(P("d(p)*d(q)", c), P("p*d(q)", c));
    EXPECT_TRUE(commutes_with(L, weight_field_of_chart(c)).equal);
    EXPECT_THROW(liouville(P("d(p)*d(q)", c), P("q*d(p)", c)), DomainError);

    // theta in its original coordinates: the field commutes with x d/dx - y d/dy
    auto x = xy();
    Expr theta = P(kTheta, x);
    VectorField Lt = liouville(exterior_d(theta), theta);
    EXPECT_TRUE(equal(interior(Lt, exterior_d(theta)), theta).equal);
    EXPECT_TRUE(commutes_with(Lt, weight_field_of_chart(x)).equal);
    EXPECT_TRUE(degree_of(Lt, weight_field_of_chart(x)).homogeneous);
}

TEST(CharacteristicDistribution, Generators) {
    auto five = make_chart({"z", "p", "q", "u", "v"}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
    auto gens = characteristic_generators(P("d(z) + p*d(q)", five));
    ASSERT_EQ(gens.size(), 2u);
    EXPECT_TRUE(equal(gens[0], VectorField::coordinate(five, "u")).equal || equal(gens[0], VectorField::coordinate(five, "v")).equal);
    auto s = make_chart({"z", "p", "q", "xi"}, {0, 0, 0, 1}, {0, 0, 0, 0});
    auto sg = characteristic_generators(P("d(z) + p*d(q)", s));
    ASSERT_EQ(sg.size(), 1u);
    EXPECT_TRUE(sg[0].parity().is_odd());
    EXPECT_TRUE(characteristic_generators(P(kCylinder, zpq())).empty());
}

// ------------------------------------------------------------- properties

TEST(Properties, ChiInvariance) {
    Rng r(43);
    auto c = make_chart({"z", "p", "q", "u", "v"}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
    auto tgt = make_chart({"Z", "P", "Q", "U", "V"}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0});
    Expr canon = P("d(Z) + P*d(Q)", tgt);
    for (int it = 0; it < 12; ++it) {
        // triangular polynomial change of coordinates keeps the form regular
        auto poly = [&](std::vector<std::string> vars) {
            std::string s = "0";
            for (int k = 0; k < 2; ++k) {
                s += " + " + std::to_string(r.integer(-2, 2)) + "/3";
                for (const auto& v : vars)
                    if (r.coin()) s += "*" + v;
            }
            return s;
        };
        std::vector<Expr> img{P("z + " + poly({"p", "q", "u", "v"}), c), P("p + " + poly({"q", "u", "v"}), c),
                              P("q + " + poly({"u", "v"}), c), P("u", c), P("v + " + poly({"u"}), c)};
        Expr a = pullback(ChartMap(c, tgt, img), canon);
        auto gens = characteristic_generators(a);
        ASSERT_EQ(gens.size(), 2u);
        Expr da = exterior_d(a);
        for (const auto& X : gens) {
            EXPECT_TRUE(is_zero(interior(X, a)).equal);
            EXPECT_TRUE(is_zero(lie_derivative(X, a)).equal);
            for (const auto& Y : gens) {
                VectorField B = lie_bracket(X, Y);
                EXPECT_TRUE(is_zero(interior(B, a)).equal);
                EXPECT_TRUE(is_zero(interior(B, da)).equal);
            }
        }
    }
}

TEST(Properties, OracleAgreement) {
    Rng r(47);
    ClassifyPolicy pol;
    pol.include_center = false;
    int compared = 0;
    for (int it = 0; it < 60; ++it) {
        auto c = testsupport::random_chart(r, 5, 0, 2);
        Expr a = testsupport::random_form(r, c, 1, 2, 4) + Expr::differential(c, 0);
        auto rep = characteristic_class(a, pol);
        ASSERT_EQ(rep.mode, "exact");
        for (const auto& ev : rep.evidence) {
            if (ev.vanishing) continue;
            EXPECT_EQ(ev.cls, darboux_class_oracle(a, *ev.exact_point)) << to_string(a);
            ++compared;
        }
    }
    EXPECT_GT(compared, 500);
}

TEST(Properties, ClassKindConsistency) {
    Rng r(53);
    for (int it = 0; it < 40; ++it) {
        auto c = testsupport::random_chart(r, 4, 2, 1);
        Expr a = testsupport::random_with_parity(r, c, 1, Parity::even(), 2, 4) + Expr::differential(c, 0);
        if (c->parity(0).is_odd()) continue;
        auto rep = characteristic_class(a);
        for (const auto& ev : rep.evidence) {
            if (ev.vanishing || ev.kase == PfaffCase::closed) continue;
            EXPECT_EQ(ev.cls, ev.kase == PfaffCase::contained ? ev.rank : ev.rank + 1);
        }
        if (rep.kind == PfaffKind::contact || rep.kind == PfaffKind::symplectic_potential) {
            EXPECT_EQ(rep.cls, rep.dim);
        }
        if (rep.kind == PfaffKind::symplectic_potential) {
            for (const auto& ev : rep.evidence) EXPECT_EQ(ev.rank, rep.dim);
        }
    }
}

TEST(Properties, NonvanishingWeightInGrading) {
    // homogeneous 1-forms built monomial by monomial; nonvanishing at the
    // origin (a zero of the weight field) forces the weight into the grading
    Rng r(59);
    for (int it = 0; it < 60; ++it) {
        auto c = testsupport::random_chart(r, 3, 2);
        auto nabla = weight_field_of_chart(c);
        Expr a = testsupport::random_form(r, c, 1, 2, 1);
        auto d = degree_of(a, nabla);
        ASSERT_TRUE(d.homogeneous);
        Expr b = a;
        for (int k = 0; k < 6; ++k) {
            Expr m = testsupport::random_monomial(r, c, 1, 2);
            auto dm = degree_of(m, nabla);
            if (dm.homogeneous && dm.degree == d.degree) b = b + m;
        }
        std::vector<double> origin(c->dim(), 0.0);
        FlatMatrix f = flat_matrix(b, origin);
        if (f.alpha->norm() == 0.0) continue;
        auto [we, wo] = c->weight_set();
        we.insert(we.end(), wo.begin(), wo.end());
        EXPECT_TRUE(std::find(we.begin(), we.end(), d.degree->weight) != we.end());
    }
}
