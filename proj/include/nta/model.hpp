#pragma once

// Gated linear student: y = sum_p c^p W^p x, trained by gradient flow on
// L = L_task + L_reg with separate timescales for weights and gates.

#include "nta/types.hpp"

#include <random>
#include <vector>

namespace nta {

enum class GateMode { PerPath, PerNeuron };

/// Grouping used by the norm regularizer when gates are per output row.
enum class NormGroup { PerRow, Global };

/// How the timescales convert gradients into rates.
///
/// PerOutputRow measures time per output unit: a parameter that drives a
/// single output row moves d_out times faster than raw gradient descent on
/// the row-averaged loss. This makes the full model's row projections follow
/// tau_w dw/dt = c (y* - y), tau_c dc/dt = w.(y* - y) exactly. Loss uses the
/// raw gradient for every parameter.
enum class RateUnits { PerOutputRow, Loss };

struct TeacherSet {
    int d_in = 0;
    int d_out = 0;
    double similarity = 0.0;
    std::vector<Matrix> W;

    int count() const { return static_cast<int>(W.size()); }
    const Matrix& operator[](int m) const { return W.at(static_cast<std::size_t>(m)); }
};

struct RegularizerConfig {
    double nonneg = 0.0;
    double norm_l1 = 0.0;
    double norm_l2 = 0.0;
    double weight_decay = 0.0;
    NormGroup norm_group = NormGroup::PerRow;

    void validate() const;
    bool gates_free() const { return nonneg == 0.0 && norm_l1 == 0.0 && norm_l2 == 0.0; }
};

struct GatedStudent {
    GateMode mode = GateMode::PerPath;
    std::vector<Matrix> W;
    /// P x 1 in per-path mode, P x d_out in per-neuron mode.
    Matrix gates;
    double tau_w = 1.0;
    double tau_c = 1.0;
    double sigma = 0.01;
    RateUnits units = RateUnits::PerOutputRow;

    int paths() const { return static_cast<int>(W.size()); }
    int d_in() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }
    int d_out() const { return W.empty() ? 0 : static_cast<int>(W.front().rows()); }
    double gate(int p, int row) const { return mode == GateMode::PerPath ? gates(p, 0) : gates(p, row); }
};

/// Fan-in Gaussian weights (variance sigma^2 / d_in), every gate 1/2.
GatedStudent make_student(int paths, int d_in, int d_out, GateMode mode, double sigma, double tau_w,
                          double tau_c, std::mt19937_64& rng);

struct Batch {
    /// Effective teacher of the active task; always present.
    Matrix teacher;
    /// d_in x B inputs and d_out x B targets; empty in expectation mode.
    Matrix X;
    Matrix Y;
    bool expectation = false;

    int size() const { return expectation ? 0 : static_cast<int>(X.cols()); }
};

Batch expectation_batch(const Matrix& teacher);

/// sum_p c^p W^p (rows scaled individually in per-neuron mode).
Matrix effective_map(const GatedStudent& student);
Matrix forward(const GatedStudent& student, const Matrix& X);

double task_loss(const GatedStudent& student, const Batch& batch);
/// Infinite-batch loss (1 / 2 d_out) ||W* - sum_p c^p W^p||_F^2.
double population_loss(const GatedStudent& student, const Matrix& teacher);
double reg_loss(const GatedStudent& student, const RegularizerConfig& reg);

// Gate regularizer on one competing group of gates (the path vector, one
// output row's gates, or one row of a second layer).
double gate_group_reg_loss(const Eigen::Ref<const Vector>& g, const RegularizerConfig& reg);
/// Adds d/dg of the nonnegativity and norm terms into out.
void add_gate_group_reg_grad(const Eigen::Ref<const Vector>& g, const RegularizerConfig& reg,
                             Eigen::Ref<Vector> out);

struct Gradients {
    std::vector<Matrix> W;
    Matrix gates;
};

Gradients gradients(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg);
std::vector<Matrix> grad_weights(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg);
Matrix grad_gates(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg);

struct StepNorms {
    std::vector<double> dW;
    double dc = 0.0;
};

/// Simultaneous Euler update of weights and gates, in place. Throws
/// NumericalAbort (time and block unset) on a non-finite parameter.
StepNorms apply_euler_step(GatedStudent& student, const Batch& batch, const RegularizerConfig& reg, double dt);
GatedStudent euler_step(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg, double dt);

} // namespace nta
