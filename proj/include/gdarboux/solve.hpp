#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eval.hpp"
#include "expr.hpp"

namespace gdarboux {

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Result of reducing x * A = c by column operations. Column operations are
/// right multiplications, so they are valid over the supercommutative
/// function algebra as long as pivots are even and invertible.
struct ColumnReduction {
    ExprMatrix a;                                      // reduced matrix, rows = unknowns
    std::vector<Expr> rhs;                             // reduced right-hand side
    std::vector<std::pair<std::size_t, std::size_t>> pivots;  // (row, column)
    std::vector<std::size_t> free_rows;
    std::vector<std::size_t> free_cols;
};

namespace detail {

inline int pivot_rank(const Expr& e) {
    if (e.is_constant()) return 0;
    if (e.size() == 1 && !e.has_atoms()) return 1;
    return 2;
}

} // namespace detail

/// Gauss-Jordan on columns. Pivots must be even with body above `body_tol` at
/// the reference point; ties prefer constants, then monomials, then size.
inline ColumnReduction column_reduce(ExprMatrix a, std::vector<Expr> rhs, const std::vector<double>& ref,
                                     double body_tol = 1e-9) {
    ColumnReduction out;
    std::size_t rows = a.size();
    std::size_t cols = rows ? a[0].size() : rhs.size();
    std::vector<bool> row_used(rows, false), col_used(cols, false);
    while (true) {
        std::optional<std::pair<std::size_t, std::size_t>> best;
        std::tuple<int, double> best_key{3, 0.0};
        for (std::size_t r = 0; r < rows; ++r) {
            if (row_used[r]) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                if (col_used[c]) continue;
                const Expr& e = a[r][c];
                if (e.is_zero()) continue;
                auto p = e.parity();
                if (!p || p->is_odd()) continue;
                double b;
                try {
                    b = eval_body(e, ref);
                } catch (const EvaluationError&) {
                    continue;
                }
                if (!(std::abs(b) > body_tol)) continue;
                std::tuple<int, double> key{detail::pivot_rank(e), -std::abs(b)};
                if (!best || key < best_key) {
                    best = {r, c};
                    best_key = key;
                }
            }
        }
        if (!best) break;
        auto [pr, pc] = *best;
        row_used[pr] = col_used[pc] = true;
        out.pivots.push_back({pr, pc});
        Expr piv = a[pr][pc];
        Expr one = Expr::constant(piv.chart(), Coefficient(1));
        Expr inv = gdiv(one, piv);
        // normalize pivot column
        for (std::size_t r = 0; r < rows; ++r) a[r][pc] = r == pr ? one : gmul(a[r][pc], inv);
        rhs[pc] = gmul(rhs[pc], inv);
        // clear the pivot row in every other column
        for (std::size_t c = 0; c < cols; ++c) {
            if (c == pc || a[pr][c].is_zero()) continue;
            Expr f = a[pr][c];
            for (std::size_t r = 0; r < rows; ++r) {
                if (r == pr) {
                    a[r][c] = Expr(piv.chart());
                    continue;
                }
                if (!a[r][pc].is_zero()) a[r][c] = a[r][c] - gmul(a[r][pc], f);
            }
            rhs[c] = rhs[c] - gmul(rhs[pc], f);
        }
    }
    for (std::size_t r = 0; r < rows; ++r)
        if (!row_used[r]) out.free_rows.push_back(r);
    for (std::size_t c = 0; c < cols; ++c)
        if (!col_used[c]) out.free_cols.push_back(c);
    out.a = std::move(a);
    out.rhs = std::move(rhs);
    return out;
}

/// Unique solution of x * A = c (x a row of unknown functions). Throws
/// SingularSystem when some unknown has no pivot or a leftover equation is
/// inconsistent (checked with `equal`).
inline std::vector<Expr> solve_left(const ExprMatrix& a, const std::vector<Expr>& c, const std::vector<double>& ref,
                                    const EqualityPolicy& policy = {}) {
    ColumnReduction red = column_reduce(a, c, ref);
    if (!red.free_rows.empty()) throw SingularSystem("linear system is rank deficient at the reference point");
    std::vector<Expr> x(a.size(), Expr(c.front().chart()));
    for (auto [r, col] : red.pivots) x[r] = red.rhs[col];
    for (std::size_t col : red.free_cols)
        if (!is_zero(red.rhs[col], policy)) throw SingularSystem("linear system is inconsistent");
    return x;
}

struct LeftKernel {
    std::vector<std::vector<Expr>> generators;
    std::vector<std::size_t> free_rows;  // generator k has x[free_rows[k]] = 1
};

/// Generators of the left kernel {x : x * A = 0}: one per free row f, with
/// x_f = 1 and pivot unknowns solved. The free block must vanish.
inline LeftKernel left_kernel(const ExprMatrix& a, const std::vector<double>& ref,
                                                  const EqualityPolicy& policy = {}) {
    if (a.empty()) return {};
    const ChartPtr& chart = a[0][0].chart();
    std::vector<Expr> zero_rhs(a[0].size(), Expr(chart));
    ColumnReduction red = column_reduce(a, zero_rhs, ref);
    for (std::size_t f : red.free_rows)
        for (std::size_t col : red.free_cols)
            if (!is_zero(red.a[f][col], policy))
                throw SingularSystem("kernel is not free on the working domain");
    LeftKernel out;
    out.free_rows = red.free_rows;
    for (std::size_t f : red.free_rows) {
        std::vector<Expr> x(a.size(), Expr(chart));
        x[f] = Expr::constant(chart, Coefficient(1));
        for (auto [r, col] : red.pivots) x[r] = -red.a[f][col];
        out.generators.push_back(std::move(x));
    }
    return out;
}

} // namespace gdarboux
