#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "coefficient.hpp"

namespace gdarboux {

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Numerical rank with a singular-value threshold relative to the largest one.
inline int numeric_rank(const Eigen::MatrixXd& m, double rtol = 1e-9) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > rtol * s(0)) ++r;
    return r;
}

/// Relative least-squares residual of v against the column space of g:
/// |v - g g^+ v| / max(|v|, 1e-300). Columns below the rank threshold are ignored.
inline double span_residual(const Eigen::MatrixXd& g, const Eigen::VectorXd& v, double rtol = 1e-9) {
    double nv = v.norm();
    if (nv == 0.0) return 0.0;
    if (g.cols() == 0) return 1.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rtol);
    Eigen::VectorXd x = svd.solve(v);
    return (g * x - v).norm() / nv;
}

inline int exact_rank(RationalMatrix m) {
    int rows = static_cast<int>(m.size());
    if (rows == 0) return 0;
    int cols = static_cast<int>(m[0].size());
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int piv = -1;
        for (int r = rank; r < rows; ++r)
            if (sgn(m[r][c]) != 0) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        std::swap(m[piv], m[rank]);
        for (int r = rank + 1; r < rows; ++r) {
            if (sgn(m[r][c]) == 0) continue;
            Rational f = m[r][c] / m[rank][c];
            for (int k = c; k < cols; ++k) m[r][k] -= f * m[rank][k];
        }
        ++rank;
    }
    return rank;
}

/// True when v lies in the row space of m (exact).
inline bool exact_in_row_space(const RationalMatrix& m, const std::vector<Rational>& v) {
    RationalMatrix aug = m;
    aug.push_back(v);
    return exact_rank(aug) == exact_rank(m);
}

inline RationalMatrix transpose(const RationalMatrix& m) {
    if (m.empty()) return {};
    RationalMatrix t(m[0].size(), std::vector<Rational>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j) t[j][i] = m[i][j];
    return t;
}

} // namespace gdarboux
