#include "nta/deep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace nta {

namespace {

Matrix fan_in_gaussian(int rows, int cols, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, sigma / std::sqrt(static_cast<double>(cols)));
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    return m;
}

template <typename F>
void for_each_row_group(const TwoLayerNet& net, const RegularizerConfig& reg, F&& fn) {
    if (reg.norm_group == NormGroup::Global) {
        fn(-1);
        return;
    }
    for (int i = 0; i < net.d_out(); ++i) fn(i);
}

void check_batch(const TwoLayerNet& net, const Batch& batch) {
    if (batch.teacher.rows() != net.d_out() || batch.teacher.cols() != net.d_in()) {
        throw ConfigError("teacher shape does not match two-layer network");
    }
    if (!batch.expectation && batch.X.rows() != net.d_in()) throw ConfigError("input dimension mismatch");
}

} // namespace

TwoLayerNet make_two_layer(int d_in, int d_hid, int d_out, double sigma, double tau_w1, double tau_w2,
                           std::mt19937_64& rng) {
    if (d_in < 1 || d_hid < 1 || d_out < 1) throw ConfigError("layer sizes must be positive");
    if (tau_w1 <= 0 || tau_w2 <= 0) throw ConfigError("timescales must be positive");
    TwoLayerNet net;
    net.W1 = fan_in_gaussian(d_hid, d_in, sigma, rng);
    net.W2 = fan_in_gaussian(d_out, d_hid, sigma, rng);
    net.tau_w1 = tau_w1;
    net.tau_w2 = tau_w2;
    return net;
}

Matrix deep_forward(const TwoLayerNet& net, const Matrix& X) {
    if (X.rows() != net.d_in()) throw ConfigError("input dimension mismatch");
    return net.W2 * (net.W1 * X);
}

double deep_population_loss(const TwoLayerNet& net, const Matrix& teacher) {
    return 0.5 * (teacher - net.W2 * net.W1).squaredNorm() / net.d_out();
}

double deep_task_loss(const TwoLayerNet& net, const Batch& batch) {
    check_batch(net, batch);
    if (batch.expectation) return deep_population_loss(net, batch.teacher);
    const Matrix E = batch.Y - deep_forward(net, batch.X);
    return 0.5 * E.squaredNorm() / (static_cast<double>(batch.X.cols()) * net.d_out());
}

double deep_reg_loss(const TwoLayerNet& net, const RegularizerConfig& reg) {
    double loss = 0.0;
    for_each_row_group(net, reg, [&](int row) {
        if (row < 0) {
            const Vector flat = Eigen::Map<const Vector>(net.W2.data(), net.W2.size());
            loss += gate_group_reg_loss(flat, reg);
        } else {
            loss += gate_group_reg_loss(net.W2.row(row).transpose(), reg);
        }
    });
    return loss;
}

DeepGradients deep_grads(const TwoLayerNet& net, const Batch& batch, const RegularizerConfig& reg) {
    check_batch(net, batch);
    // G is the error correlation: d L / d(W2 W1) = -scale * G.
    Matrix G;
    double scale;
    if (batch.expectation) {
        G = batch.teacher - net.W2 * net.W1;
        scale = 1.0 / net.d_out();
    } else {
        const Matrix E = batch.Y - deep_forward(net, batch.X);
        G = E * batch.X.transpose();
        scale = 1.0 / (static_cast<double>(batch.X.cols()) * net.d_out());
    }
    DeepGradients g;
    g.W1 = -scale * net.W2.transpose() * G;
    g.W2 = -scale * G * net.W1.transpose();

    for_each_row_group(net, reg, [&](int row) {
        if (row < 0) {
            const Vector flat = Eigen::Map<const Vector>(net.W2.data(), net.W2.size());
            Vector out = Vector::Zero(flat.size());
            add_gate_group_reg_grad(flat, reg, out);
            g.W2 += Eigen::Map<const Matrix>(out.data(), net.W2.rows(), net.W2.cols());
        } else {
            Vector out = Vector::Zero(net.d_hid());
            add_gate_group_reg_grad(net.W2.row(row).transpose(), reg, out);
            g.W2.row(row) += out.transpose();
        }
    });
    return g;
}

DeepStepNorms apply_deep_step(TwoLayerNet& net, const Batch& batch, const RegularizerConfig& reg, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const DeepGradients g = deep_grads(net, batch, reg);
    DeepStepNorms n;
    n.gW1 = g.W1.norm();
    n.gW2 = g.W2.norm();
    const Matrix d1 = -(dt / net.tau_w1) * g.W1;
    const Matrix d2 = -(dt / net.tau_w2) * g.W2;
    net.W1 += d1;
    net.W2 += d2;
    n.dW1 = d1.norm();
    n.dW2 = d2.norm();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!net.W1.allFinite()) throw NumericalAbort("non-finite first layer", nan, -1, "W1");
    if (!net.W2.allFinite()) throw NumericalAbort("non-finite second layer", nan, -1, "W2");
    return n;
}

SortResult sort_students(const TwoLayerNet& net, const TeacherSet& teachers) {
    const int M = teachers.count();
    const int d_out = teachers.d_out;
    const int H = net.d_hid();
    if (H != M * d_out) throw ConfigError("sorting needs d_hid = M * d_out");
    if (teachers.d_in != net.d_in()) throw ConfigError("teacher input dimension mismatch");

    const Vector norms = net.W1.rowwise().norm();
    // (cosine, hidden unit, slot); zero-norm units score 0 against every slot.
    std::vector<std::tuple<double, int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(H) * static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
        for (int m = 0; m < M; ++m) {
            for (int i = 0; i < d_out; ++i) {
                const double n = norms[h] * teachers[m].row(i).norm();
                const double cos = n > 0.0 ? net.W1.row(h).dot(teachers[m].row(i)) / n : 0.0;
                pairs.emplace_back(cos, h, m * d_out + i);
            }
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
        return std::get<2>(a) < std::get<2>(b);
    });

    SortResult r;
    r.permutation.assign(static_cast<std::size_t>(H), -1);
    r.owner.assign(static_cast<std::size_t>(H), -1);
    int assigned = 0;
    for (const auto& [cos, h, slot] : pairs) {
        if (assigned == H) break;
        if (r.owner[static_cast<std::size_t>(h)] >= 0 || r.permutation[static_cast<std::size_t>(slot)] >= 0) continue;
        r.permutation[static_cast<std::size_t>(slot)] = h;
        r.owner[static_cast<std::size_t>(h)] = slot / d_out;
        ++assigned;
    }

    r.sorted_W2 = Matrix(net.d_out(), H);
    for (int s = 0; s < H; ++s) r.sorted_W2.col(s) = net.W2.col(r.permutation[static_cast<std::size_t>(s)]);
    r.gates.resize(M);
    r.diagonal_gates.resize(M);
    for (int m = 0; m < M; ++m) {
        Matrix student(d_out, net.d_in());
        for (int i = 0; i < d_out; ++i) student.row(i) = net.W1.row(r.permutation[static_cast<std::size_t>(m * d_out + i)]);
        r.students.push_back(std::move(student));
        const auto block = r.sorted_W2.middleCols(m * d_out, d_out);
        r.gates[m] = block.mean();
        r.diagonal_gates[m] = net.d_out() == d_out ? block.diagonal().mean() : block.mean();
    }
    return r;
}

TwoLayerNet permute_hidden(const TwoLayerNet& net, const std::vector<int>& permutation) {
    if (static_cast<int>(permutation.size()) != net.d_hid()) throw ConfigError("permutation size mismatch");
    TwoLayerNet out = net;
    for (int s = 0; s < net.d_hid(); ++s) {
        const int h = permutation[static_cast<std::size_t>(s)];
        out.W1.row(s) = net.W1.row(h);
        out.W2.col(s) = net.W2.col(h);
    }
    return out;
}

} // namespace nta
