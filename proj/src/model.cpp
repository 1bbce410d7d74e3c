#include "nta/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace nta {

namespace {

void check_input(const GatedStudent& student, const Matrix& X) {
    if (X.rows() != student.d_in()) {
        throw ConfigError("input has " + std::to_string(X.rows()) + " rows, student expects d_in=" +
                          std::to_string(student.d_in()));
    }
}

void check_batch(const GatedStudent& student, const Batch& batch) {
    if (batch.teacher.rows() != student.d_out() || batch.teacher.cols() != student.d_in()) {
        throw ConfigError("teacher shape " + std::to_string(batch.teacher.rows()) + "x" +
                          std::to_string(batch.teacher.cols()) + " does not match student " +
                          std::to_string(student.d_out()) + "x" + std::to_string(student.d_in()));
    }
    if (!batch.expectation) {
        check_input(student, batch.X);
        if (batch.Y.rows() != student.d_out() || batch.Y.cols() != batch.X.cols()) {
            throw ConfigError("target matrix does not match batch shape");
        }
        if (batch.X.cols() == 0) {
            throw ConfigError("sampled batch has no columns");
        }
    }
}

// Error correlation G and its normalization s such that the task gradient of
// W^p is -s * c^p * G: sampled mode G = E X^T with s = 1/(B d_out), expectation
// mode G = W* - sum_p c^p W^p with s = 1/d_out.
struct ErrorCorrelation {
    Matrix G;
    double scale;
};

ErrorCorrelation error_correlation(const GatedStudent& student, const Batch& batch) {
    const double d_out = student.d_out();
    if (batch.expectation) {
        return {batch.teacher - effective_map(student), 1.0 / d_out};
    }
    const Matrix E = batch.Y - forward(student, batch.X);
    return {E * batch.X.transpose(), 1.0 / (d_out * static_cast<double>(batch.X.cols()))};
}

template <typename F>
void for_each_gate_group(const GatedStudent& student, const RegularizerConfig& reg, F&& fn) {
    if (student.mode == GateMode::PerPath) {
        fn(0);
        return;
    }
    if (reg.norm_group == NormGroup::Global) {
        fn(-1);
        return;
    }
    for (int i = 0; i < student.d_out(); ++i) fn(i);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace

void RegularizerConfig::validate() const {
    if (nonneg < 0 || norm_l1 < 0 || norm_l2 < 0 || weight_decay < 0) {
        throw ConfigError("regularizer coefficients must be nonnegative");
    }
}

GatedStudent make_student(int paths, int d_in, int d_out, GateMode mode, double sigma, double tau_w,
                          double tau_c, std::mt19937_64& rng) {
    if (paths < 1 || d_in < 1 || d_out < 1) throw ConfigError("student dimensions must be positive");
    if (tau_w <= 0 || tau_c <= 0) throw ConfigError("timescales must be positive");
    GatedStudent s;
    s.mode = mode;
    s.tau_w = tau_w;
    s.tau_c = tau_c;
    s.sigma = sigma;
    std::normal_distribution<double> normal(0.0, sigma / std::sqrt(static_cast<double>(d_in)));
    s.W.reserve(static_cast<std::size_t>(paths));
    for (int p = 0; p < paths; ++p) {
        Matrix w(d_out, d_in);
        // Column-major fill order is fixed so that a seed maps to one student.
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = normal(rng);
        s.W.push_back(std::move(w));
    }
    s.gates = Matrix::Constant(paths, mode == GateMode::PerPath ? 1 : d_out, 0.5);
    return s;
}

Batch expectation_batch(const Matrix& teacher) {
    Batch b;
    b.teacher = teacher;
    b.expectation = true;
    return b;
}

Matrix effective_map(const GatedStudent& student) {
    Matrix out = Matrix::Zero(student.d_out(), student.d_in());
    for (int p = 0; p < student.paths(); ++p) {
        if (student.mode == GateMode::PerPath) {
            out.noalias() += student.gates(p, 0) * student.W[static_cast<std::size_t>(p)];
        } else {
            out.noalias() += student.gates.row(p).transpose().asDiagonal() * student.W[static_cast<std::size_t>(p)];
        }
    }
    return out;
}

Matrix forward(const GatedStudent& student, const Matrix& X) {
    check_input(student, X);
    return effective_map(student) * X;
}

double task_loss(const GatedStudent& student, const Batch& batch) {
    check_batch(student, batch);
    if (batch.expectation) return population_loss(student, batch.teacher);
    const Matrix E = batch.Y - forward(student, batch.X);
    return 0.5 * E.squaredNorm() / (static_cast<double>(batch.X.cols()) * student.d_out());
}

double population_loss(const GatedStudent& student, const Matrix& teacher) {
    return 0.5 * (teacher - effective_map(student)).squaredNorm() / student.d_out();
}

double gate_group_reg_loss(const Eigen::Ref<const Vector>& g, const RegularizerConfig& reg) {
    double loss = 0.0;
    if (reg.nonneg != 0.0) loss += reg.nonneg * (-g.array()).max(0.0).sum();
    if (reg.norm_l1 != 0.0) {
        const double r = g.lpNorm<1>() - 1.0;
        loss += reg.norm_l1 * 0.5 * r * r;
    }
    if (reg.norm_l2 != 0.0) {
        const double r = g.norm() - 1.0;
        loss += reg.norm_l2 * 0.5 * r * r;
    }
    return loss;
}

void add_gate_group_reg_grad(const Eigen::Ref<const Vector>& g, const RegularizerConfig& reg,
                             Eigen::Ref<Vector> out) {
    if (reg.nonneg != 0.0) {
        for (Eigen::Index k = 0; k < g.size(); ++k)
            if (g[k] < 0.0) out[k] -= reg.nonneg;
    }
    if (reg.norm_l1 != 0.0) {
        const double r = reg.norm_l1 * (g.lpNorm<1>() - 1.0);
        for (Eigen::Index k = 0; k < g.size(); ++k) {
            const double sign = g[k] > 0.0 ? 1.0 : (g[k] < 0.0 ? -1.0 : 0.0);
            out[k] += r * sign;
        }
    }
    if (reg.norm_l2 != 0.0) {
        const double n = g.norm();
        if (n > 0.0) out += reg.norm_l2 * (n - 1.0) / n * g;
    }
}

double reg_loss(const GatedStudent& student, const RegularizerConfig& reg) {
    double loss = 0.0;
    for_each_gate_group(student, reg, [&](int group) {
        if (group < 0) {
            const Vector flat = Eigen::Map<const Vector>(student.gates.data(), student.gates.size());
            loss += gate_group_reg_loss(flat, reg);
        } else {
            loss += gate_group_reg_loss(student.gates.col(group), reg);
        }
    });
    if (reg.weight_decay != 0.0) {
        double sq = 0.0;
        for (const auto& w : student.W) sq += w.squaredNorm();
        loss += reg.weight_decay / (2.0 * student.paths() * student.d_in()) * sq;
    }
    return loss;
}

Gradients gradients(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg) {
    check_batch(student, batch);
    const auto [G, scale] = error_correlation(student, batch);
    const int P = student.paths();
    Gradients out;
    out.W.reserve(static_cast<std::size_t>(P));
    out.gates = Matrix::Zero(student.gates.rows(), student.gates.cols());
    const double decay = reg.weight_decay / (static_cast<double>(P) * student.d_in());

    for (int p = 0; p < P; ++p) {
        const Matrix& W = student.W[static_cast<std::size_t>(p)];
        Matrix gW;
        if (student.mode == GateMode::PerPath) {
            gW = (-scale * student.gates(p, 0)) * G;
            out.gates(p, 0) = -scale * W.cwiseProduct(G).sum();
        } else {
            gW = (-scale * student.gates.row(p).transpose()).asDiagonal() * G;
            out.gates.row(p) = -scale * W.cwiseProduct(G).rowwise().sum().transpose();
        }
        if (decay != 0.0) gW += decay * W;
        out.W.push_back(std::move(gW));
    }

    for_each_gate_group(student, reg, [&](int group) {
        if (group < 0) {
            const Vector flat = Eigen::Map<const Vector>(student.gates.data(), student.gates.size());
            Vector g = Vector::Zero(flat.size());
            add_gate_group_reg_grad(flat, reg, g);
            out.gates += Eigen::Map<const Matrix>(g.data(), student.gates.rows(), student.gates.cols());
        } else {
            Vector g = Vector::Zero(P);
            add_gate_group_reg_grad(student.gates.col(group), reg, g);
            out.gates.col(group) += g;
        }
    });
    return out;
}

std::vector<Matrix> grad_weights(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg) {
    return gradients(student, batch, reg).W;
}

Matrix grad_gates(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg) {
    return gradients(student, batch, reg).gates;
}

StepNorms apply_euler_step(GatedStudent& student, const Batch& batch, const RegularizerConfig& reg, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const Gradients g = gradients(student, batch, reg);
    const bool per_row = student.units == RateUnits::PerOutputRow;
    const double row_factor = per_row ? static_cast<double>(student.d_out()) : 1.0;
    const double w_rate = dt / student.tau_w * row_factor;
    const double c_rate = dt / student.tau_c * (student.mode == GateMode::PerNeuron ? row_factor : 1.0);

    StepNorms norms;
    norms.dW.reserve(student.W.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t p = 0; p < student.W.size(); ++p) {
        const Matrix delta = -w_rate * g.W[p];
        student.W[p] += delta;
        norms.dW.push_back(delta.norm());
        if (!all_finite(student.W[p])) {
            throw NumericalAbort("non-finite weights in path " + std::to_string(p), nan, -1,
                                 "W[" + std::to_string(p) + "]");
        }
    }
    const Matrix dc = -c_rate * g.gates;
    student.gates += dc;
    norms.dc = dc.norm();
    if (!all_finite(student.gates)) throw NumericalAbort("non-finite gates", nan, -1, "gates");
    return norms;
}

GatedStudent euler_step(const GatedStudent& student, const Batch& batch, const RegularizerConfig& reg, double dt) {
    GatedStudent next = student;
    apply_euler_step(next, batch, reg, dt);
    return next;
}

} // namespace nta
