#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include "nta/deep.hpp"
#include "nta/model.hpp"
#include "nta/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace oracle {

using nta::Matrix;
using nta::Vector;

inline double rel_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / scale;
}

/// Central differences of f around x, entry by entry.
inline Matrix fd_gradient(const Matrix& x, const std::function<double(const Matrix&)>& f, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    Matrix probe = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double v = probe(i, j);
            probe(i, j) = v + h;
            const double up = f(probe);
            probe(i, j) = v - h;
            const double down = f(probe);
            probe(i, j) = v;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

/// Uniform entries in [-1, 1] kept at least `gap` away from zero.
inline Matrix away_from_zero(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double gap = 0.05) {
    std::uniform_real_distribution<double> u(gap, 1.0);
    std::bernoulli_distribution sign(0.5);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sign(rng) ? u(rng) : -u(rng);
    return m;
}

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

/// Student with O(1) weights and gates clear of the regularizer kinks.
inline nta::GatedStudent random_student(int paths, int d_in, int d_out, nta::GateMode mode, std::mt19937_64& rng) {
    nta::GatedStudent s = nta::make_student(paths, d_in, d_out, mode, 0.01, 1.0, 1.0, rng);
    for (auto& w : s.W) w = gaussian(d_out, d_in, rng, 0.5);
    s.gates = away_from_zero(s.gates.rows(), s.gates.cols(), rng);
    return s;
}

inline double total_loss(const nta::GatedStudent& s, const nta::Batch& b, const nta::RegularizerConfig& reg) {
    return nta::task_loss(s, b) + nta::reg_loss(s, reg);
}

/// Reduced P = M = 2 step with the error replaced by its antisymmetric part
/// (eps_bar, -eps_bar), no regularizer. The library step sees the projected
/// error through a temporarily shifted target.
inline void symmetric_flow_step(nta::ReducedState& s, double dt) {
    const Matrix target = s.target;
    const Vector eps = s.error().col(0);
    const double bar = 0.5 * (eps[0] - eps[1]);
    Vector sym(2);
    sym << bar, -bar;
    s.target.col(0) = s.output().col(0) + sym;
    nta::apply_reduced_step(s, dt, {});
    s.target = target;
}

/// tau_c cbar^2 - 2 tau_w wbar^2 written out from the raw coordinates.
inline double symmetric_invariant(const nta::ReducedState& s) {
    const double cbar = s.c[0] - s.c[1];
    const double wbar1 = s.w[0](0, 0) - s.w[1](0, 0);
    const double wbar2 = s.w[1](1, 0) - s.w[0](1, 0);
    const double wbar = 0.5 * (wbar1 + wbar2);
    return s.tau_c * cbar * cbar - 2.0 * s.tau_w * wbar * wbar;
}

} // namespace oracle
