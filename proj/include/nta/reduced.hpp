#pragma once

// Effective dynamics of the gated model in the teachers' basis.
//
// Each mode k (a teacher row, or a singular mode) carries one vector per
// path with a component per teacher, and all modes share the gates:
//   tau_w dw^p_k/dt = c^p eps_k
//   tau_c dc^p/dt   = mean_k (w^p_k . eps_k) - dL_reg/dc^p
// with eps_k = y*_k - sum_p c^p w^p_k. A single mode gives the 2D model.

#include "nta/model.hpp"

#include <vector>

namespace nta {

struct ReducedState {
    /// w[p] is M x K: column k is path p's vector in mode k.
    std::vector<Matrix> w;
    Vector c;
    /// M x K targets; column k is the active teacher's coordinates in mode k.
    Matrix target;
    double tau_w = 1.0;
    double tau_c = 1.0;

    int paths() const { return static_cast<int>(w.size()); }
    int components() const { return static_cast<int>(target.rows()); }
    int modes() const { return static_cast<int>(target.cols()); }

    Matrix output() const;
    Matrix error() const;
};

/// Two paths, two teachers, one mode: w^1, w^2, c and the active target e_m.
ReducedState make_reduced_2d(const Eigen::Vector2d& w1, const Eigen::Vector2d& w2, const Eigen::Vector2d& c,
                             int active, double tau_w, double tau_c);

/// w^p_m = delta_pm, c^p = delta_p1, target e_active.
ReducedState specialized_state(int active, double tau_w, double tau_c);

/// Points every mode's target at the unit coordinate of one teacher (or a sum).
void set_target(ReducedState& state, const std::vector<int>& members);

/// (1 / 2K) sum_k ||eps_k||^2.
double reduced_loss(const ReducedState& state);

struct SpecCoords {
    double wbar1 = 0.0;
    double wbar2 = 0.0;
    double wbar = 0.0;
    double cbar = 0.0;
    double wbarbar = 0.0;
};

/// Specialization coordinates of the mode-averaged vectors (P = M = 2).
SpecCoords spec_coords(const ReducedState& state);

ReducedState reduced_step(const ReducedState& state, double dt, const RegularizerConfig& reg);
void apply_reduced_step(ReducedState& state, double dt, const RegularizerConfig& reg);

/// wbar on the symmetric flexible-regime solution through cbar = wbar = 1.
double exact_wbar(double cbar, double tau_c, double tau_w);
/// tau_c cbar^2 - 2 tau_w wbar^2, constant along symmetric trajectories.
double conserved_quantity(double cbar, double wbar, double tau_c, double tau_w);

struct SymmetryResidual {
    double eps_sum = 0.0;    // eps_1 + eps_2
    double wbar_diff = 0.0;  // wbar_1 - wbar_2
};

std::vector<SymmetryResidual> symmetry_residuals(const std::vector<ReducedState>& trajectory);

/// Instantaneous loss-descent speed -dL_task/dt from the tangent kernel with
/// the model's timescales; with tau_w = tau_c = 1 and one mode it equals
/// sum_p ||eps||^2 (c^p)^2 + (w^p . eps)^2.
double ntk_descent_rate(const ReducedState& state);

/// Second-order growth of wbar over a two-period window of short blocks.
double blocklength_prediction(double wbar0, double eps_norm, double tau_B);

enum class ProjectionBasis { Rows, SingularModes };

struct Projection {
    ReducedState state;
    /// Frobenius norm of the student outside the teacher basis (all paths).
    double residual_norm = 0.0;
    double student_norm = 0.0;
    /// Gram matrix of the basis elements that failed the orthogonality check.
    Matrix gram;
};

/// Projects a per-path student onto the teachers' row (or singular-mode)
/// basis. Refuses non-orthogonal bases with ConfigError unless force is set.
Projection project_full(const GatedStudent& student, const TeacherSet& teachers, const std::vector<int>& active,
                        ProjectionBasis basis = ProjectionBasis::Rows, bool force = false);

} // namespace nta
