#pragma once

// Two-layer fully-connected linear student y = W2 W1 x whose second layer is
// regularized like a gate layer and learns on a faster timescale.

#include "nta/model.hpp"

#include <random>
#include <vector>

namespace nta {

struct TwoLayerNet {
    Matrix W1;  // d_hid x d_in
    Matrix W2;  // d_out x d_hid
    double tau_w1 = 1.0;
    double tau_w2 = 1.0;

    int d_in() const { return static_cast<int>(W1.cols()); }
    int d_hid() const { return static_cast<int>(W1.rows()); }
    int d_out() const { return static_cast<int>(W2.rows()); }
};

/// Both layers i.i.d. Gaussian with fan-in variance sigma^2 / fan_in.
TwoLayerNet make_two_layer(int d_in, int d_hid, int d_out, double sigma, double tau_w1, double tau_w2,
                           std::mt19937_64& rng);

Matrix deep_forward(const TwoLayerNet& net, const Matrix& X);
double deep_task_loss(const TwoLayerNet& net, const Batch& batch);
double deep_population_loss(const TwoLayerNet& net, const Matrix& teacher);
/// Every W2 entry is a gate: nonnegativity per entry, norm term per output
/// row (or over the whole layer with NormGroup::Global).
double deep_reg_loss(const TwoLayerNet& net, const RegularizerConfig& reg);

struct DeepGradients {
    Matrix W1;
    Matrix W2;
};

DeepGradients deep_grads(const TwoLayerNet& net, const Batch& batch, const RegularizerConfig& reg);

struct DeepStepNorms {
    double dW1 = 0.0;
    double dW2 = 0.0;
    double gW1 = 0.0;  // gradient norms before scaling by the rates
    double gW2 = 0.0;
};

DeepStepNorms apply_deep_step(TwoLayerNet& net, const Batch& batch, const RegularizerConfig& reg, double dt);

struct SortResult {
    /// Hidden unit assigned to (teacher m, teacher row i): slot m * d_out + i.
    std::vector<int> permutation;
    /// Teacher each hidden unit was assigned to.
    std::vector<int> owner;
    /// Sorted first layer split into one d_out x d_in student per teacher.
    std::vector<Matrix> students;
    /// W2 with columns permuted to the sorted hidden order.
    Matrix sorted_W2;
    /// Mean of each student's d_out x d_out block of the sorted W2.
    Vector gates;
    /// Mean of the diagonal of each block (unit i gating output i).
    Vector diagonal_gates;
};

/// Assigns each first-layer row to its best-matching teacher row by cosine
/// similarity. When a teacher row is already taken the hidden unit spills to
/// its next-best free slot, so every student has exactly d_out rows.
SortResult sort_students(const TwoLayerNet& net, const TeacherSet& teachers);

/// Applies a hidden-unit permutation to both layers; the network function is unchanged.
TwoLayerNet permute_hidden(const TwoLayerNet& net, const std::vector<int>& permutation);

} // namespace nta
