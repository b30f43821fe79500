#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include <gdarboux/parse.hpp>
#include <gdarboux/straighten.hpp>

using namespace gdarboux;

namespace {

VectorField field(const ChartPtr& c, std::vector<std::string> coeffs) {
    std::vector<Expr> e;
    for (const auto& s : coeffs) e.push_back(parse_expr(s, c));
    return VectorField(c, Parity::even(), std::move(e));
}

// independent quadrature: int_0^x ds / (2 + sin s) for |x| < pi
double reciprocal_quadrature(double x) {
    auto F = [](double s) { return 2 / std::sqrt(3.0) * std::atan((2 * std::tan(s / 2) + 1) / std::sqrt(3.0)); };
    return F(x) - F(0);
}

} // namespace

TEST(BodyFunction, MatchesEvaluator) {
    auto c = make_chart({"x", "y"}, {0, 0}, {0, 0});
    Expr e = parse_expr("x^2*sin(x*y) + exp(y)/(2+cos(x)) - 3*cosh(x)/y^2", c);
    BodyFunction f(e);
    for (double x : {-0.7, 0.1, 0.9})
        for (double y : {-0.8, 0.4})
            EXPECT_NEAR(f({x, y}), eval_body(e, {x, y}), 1e-13);
}

TEST(Straighten, CoordinateField) {
    auto c = make_chart({"x"}, {0}, {0});
    auto g = straighten_commuting({field(c, {"1"})}, {0.0});
    EXPECT_TRUE(g.certified());
    ASSERT_EQ(g.points.size(), 5u);
    for (std::size_t n = 0; n < g.points.size(); ++n) EXPECT_NEAR(g.points[n][0], g.times[n][0], 1e-14);
}

TEST(Straighten, ReciprocalSpeed) {
    auto t0 = std::chrono::steady_clock::now();
    auto c = make_chart({"x"}, {0}, {0}, {{-3, 3}});
    StraightenParams par;
    par.nodes = 21;
    auto g = straighten_commuting({field(c, {"2 + sin(x)"})}, {0.0}, par);
    EXPECT_TRUE(g.certified());
    EXPECT_LT(g.max_error, 1e-6);
    double worst = 0;
    for (std::size_t n = 0; n < g.points.size(); ++n)
        worst = std::max(worst, std::abs(reciprocal_quadrature(g.points[n][0]) - g.times[n][0]));
    EXPECT_LT(worst, 1e-6);
    for (std::size_t n = 1; n < g.points.size(); ++n) EXPECT_GT(g.points[n][0], g.points[n - 1][0]);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 10.0);
}

TEST(Straighten, CommutingPair) {
    auto c = make_chart({"x", "y", "z"}, {0, 0, 0}, {0, 0, 0}, {{-2, 2}, {-2, 2}, {-2, 2}});
    auto g = straighten_commuting({field(c, {"1", "0", "0"}), field(c, {"0", "1", "cos(y)"})}, {0, 0, 0});
    EXPECT_TRUE(g.certified()) << g.max_error;
    ASSERT_EQ(g.complement, (std::vector<std::size_t>{1}));
    ASSERT_EQ(g.points.size(), 125u);
    // closed form: x = t1, y = s + t2, z = sin(s + t2) - sin(s)
    for (std::size_t n = 0; n < g.points.size(); ++n) {
        double t1 = g.times[n][0], t2 = g.times[n][1], s = g.times[n][2];
        EXPECT_NEAR(g.points[n][0], t1, 1e-12);
        EXPECT_NEAR(g.points[n][1], s + t2, 1e-12);
        EXPECT_NEAR(g.points[n][2], std::sin(s + t2) - std::sin(s), 1e-10);
    }
}

TEST(Straighten, Errors) {
    auto c = make_chart({"x", "y"}, {0, 0}, {0, 0});
    EXPECT_THROW(straighten_commuting({field(c, {"1", "0"}), field(c, {"0", "x"})}, {0, 0}), DomainError);
    EXPECT_THROW(straighten_commuting({field(c, {"1", "0"}), field(c, {"2", "0"})}, {0, 0}), SingularSystem);
    StraightenParams wide;
    wide.extent = 3;
    EXPECT_THROW(straighten_commuting({field(c, {"1", "0"})}, {0, 0}, wide), DomainError);
    auto s = make_chart({"x", "u"}, {0, 1}, {0, 0});
    EXPECT_THROW(straighten_commuting({VectorField::coordinate(s, 0)}, {0, 0}), DomainError);
}

TEST(Straighten, CsvExport) {
    auto c = make_chart({"x", "y"}, {0, 0}, {0, 0});
    StraightenParams par;
    par.nodes = 3;
    auto g = straighten_commuting({field(c, {"1", "0"})}, {0.25, 0}, par);
    std::string csv = g.csv();
    EXPECT_EQ(csv.rfind("# base=0.25 0 step=0.5 0.5\nx,y,y1,y2\n", 0), 0u) << csv;
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 9);
}
