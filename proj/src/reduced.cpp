#include "nta/reduced.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace nta {

Matrix ReducedState::output() const {
    Matrix y = Matrix::Zero(target.rows(), target.cols());
    for (int p = 0; p < paths(); ++p) y += c[p] * w[static_cast<std::size_t>(p)];
    return y;
}

Matrix ReducedState::error() const { return target - output(); }

ReducedState make_reduced_2d(const Eigen::Vector2d& w1, const Eigen::Vector2d& w2, const Eigen::Vector2d& c,
                             int active, double tau_w, double tau_c) {
    if (active < 0 || active > 1) throw ConfigError("2D reduced model has teachers 0 and 1");
    ReducedState s;
    s.w = {Matrix(w1), Matrix(w2)};
    s.c = c;
    s.target = Matrix::Zero(2, 1);
    s.target(active, 0) = 1.0;
    s.tau_w = tau_w;
    s.tau_c = tau_c;
    return s;
}

ReducedState specialized_state(int active, double tau_w, double tau_c) {
    return make_reduced_2d({1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, active, tau_w, tau_c);
}

void set_target(ReducedState& state, const std::vector<int>& members) {
    state.target.setZero();
    for (int m : members) {
        if (m < 0 || m >= state.components()) throw ConfigError("target teacher out of range");
        state.target.row(m).setOnes();
    }
}

double reduced_loss(const ReducedState& state) { return 0.5 * state.error().squaredNorm() / state.modes(); }

SpecCoords spec_coords(const ReducedState& state) {
    if (state.paths() != 2 || state.components() != 2) {
        throw ConfigError("specialization coordinates need two paths and two teachers");
    }
    const Vector w1 = state.w[0].rowwise().mean();
    const Vector w2 = state.w[1].rowwise().mean();
    SpecCoords s;
    s.wbar1 = w1[0] - w2[0];
    s.wbar2 = w2[1] - w1[1];
    s.wbar = 0.5 * (s.wbar1 + s.wbar2);
    s.cbar = state.c[0] - state.c[1];
    s.wbarbar = 0.5 * ((w1[0] - w1[1]) + (w2[0] - w2[1]));
    return s;
}

void apply_reduced_step(ReducedState& state, double dt, const RegularizerConfig& reg) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const Matrix eps = state.error();
    const double K = state.modes();
    Vector gc = Vector::Zero(state.paths());
    add_gate_group_reg_grad(state.c, reg, gc);
    Vector dc(state.paths());
    for (int p = 0; p < state.paths(); ++p) {
        const double drive = state.w[static_cast<std::size_t>(p)].cwiseProduct(eps).sum() / K;
        dc[p] = dt / state.tau_c * (drive - gc[p]);
    }
    for (int p = 0; p < state.paths(); ++p) {
        state.w[static_cast<std::size_t>(p)] += (dt / state.tau_w * state.c[p]) * eps;
    }
    state.c += dc;

    bool finite = state.c.allFinite();
    for (const auto& w : state.w) finite = finite && w.allFinite();
    if (!finite) {
        throw NumericalAbort("non-finite reduced state", std::numeric_limits<double>::quiet_NaN(), -1, "reduced");
    }
}

ReducedState reduced_step(const ReducedState& state, double dt, const RegularizerConfig& reg) {
    ReducedState next = state;
    apply_reduced_step(next, dt, reg);
    return next;
}

double exact_wbar(double cbar, double tau_c, double tau_w) {
    if (!(tau_c > 0.0) || !(tau_w > 0.0)) throw DomainError("timescales must be positive");
    const double radicand = 1.0 - 0.5 * (tau_c / tau_w) * (1.0 - cbar * cbar);
    if (radicand < 0.0) {
        std::ostringstream msg;
        msg << "exact solution undefined: radicand " << radicand << " < 0 at cbar=" << cbar
            << ", tau_c/tau_w=" << tau_c / tau_w;
        throw DomainError(msg.str());
    }
    return std::sqrt(radicand);
}

double conserved_quantity(double cbar, double wbar, double tau_c, double tau_w) {
    return tau_c * cbar * cbar - 2.0 * tau_w * wbar * wbar;
}

std::vector<SymmetryResidual> symmetry_residuals(const std::vector<ReducedState>& trajectory) {
    std::vector<SymmetryResidual> out;
    out.reserve(trajectory.size());
    for (const auto& s : trajectory) {
        const Vector eps = s.error().rowwise().mean();
        const SpecCoords sc = spec_coords(s);
        out.push_back({eps[0] + eps[1], sc.wbar1 - sc.wbar2});
    }
    return out;
}

double ntk_descent_rate(const ReducedState& state) {
    const Matrix eps = state.error();
    const double K = state.modes();
    const double eps_sq = eps.squaredNorm() / K;
    double rate = 0.0;
    for (int p = 0; p < state.paths(); ++p) {
        const double align = state.w[static_cast<std::size_t>(p)].cwiseProduct(eps).sum() / K;
        rate += state.c[p] * state.c[p] * eps_sq / state.tau_w + align * align / state.tau_c;
    }
    return rate;
}

double blocklength_prediction(double wbar0, double eps_norm, double tau_B) {
    return 2.0 * (2.0 * std::abs(wbar0) * eps_norm) * tau_B * tau_B;
}

namespace {

// Throws unless the basis elements are orthonormal within tolerance.
void check_basis(const Matrix& gram, bool force, const std::string& what, Projection& out) {
    const double dev = (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-8) {
        out.gram = gram;
        if (!force) {
            std::ostringstream msg;
            msg << what << " basis is not orthonormal (max Gram deviation " << dev << "):\n" << gram;
            throw ConfigError(msg.str());
        }
    }
}

} // namespace

Projection project_full(const GatedStudent& student, const TeacherSet& teachers, const std::vector<int>& active,
                        ProjectionBasis basis, bool force) {
    if (student.mode != GateMode::PerPath) throw ConfigError("projection needs per-path gates");
    if (teachers.d_in != student.d_in() || teachers.d_out != student.d_out()) {
        throw ConfigError("teacher and student shapes differ");
    }
    const int M = teachers.count();
    const int P = student.paths();
    Projection out;
    out.state.c = student.gates.col(0);
    out.state.tau_w = student.tau_w;
    out.state.tau_c = student.tau_c;

    double residual_sq = 0.0;
    double norm_sq = 0.0;
    for (const auto& W : student.W) norm_sq += W.squaredNorm();

    if (basis == ProjectionBasis::Rows) {
        const int K = teachers.d_out;
        out.state.target = Matrix::Zero(M, K);
        out.state.w.assign(static_cast<std::size_t>(P), Matrix::Zero(M, K));
        for (int k = 0; k < K; ++k) {
            Matrix rows(M, teachers.d_in);
            for (int m = 0; m < M; ++m) rows.row(m) = teachers[m].row(k);
            check_basis(rows * rows.transpose(), force, "teacher row " + std::to_string(k), out);
            for (int p = 0; p < P; ++p) {
                const Eigen::RowVectorXd r = student.W[static_cast<std::size_t>(p)].row(k);
                const Vector coords = rows * r.transpose();
                out.state.w[static_cast<std::size_t>(p)].col(k) = coords;
                residual_sq += (r - coords.transpose() * rows).squaredNorm();
            }
        }
        set_target(out.state, active);
    } else {
        // Mode alpha of every teacher forms one 2D (M-dimensional) system.
        std::vector<Eigen::JacobiSVD<Matrix>> svds;
        int K = std::min(teachers.d_in, teachers.d_out);
        for (int m = 0; m < M; ++m) svds.emplace_back(teachers[m], Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.state.target = Matrix::Zero(M, K);
        out.state.w.assign(static_cast<std::size_t>(P), Matrix::Zero(M, K));

        Matrix gram(M * K, M * K);
        for (int a = 0; a < M * K; ++a) {
            for (int b = 0; b < M * K; ++b) {
                const auto& sa = svds[static_cast<std::size_t>(a / K)];
                const auto& sb = svds[static_cast<std::size_t>(b / K)];
                gram(a, b) = sa.matrixU().col(a % K).dot(sb.matrixU().col(b % K)) *
                             sa.matrixV().col(a % K).dot(sb.matrixV().col(b % K));
            }
        }
        check_basis(gram, force, "singular-mode", out);

        for (int p = 0; p < P; ++p) {
            Matrix recon = Matrix::Zero(teachers.d_out, teachers.d_in);
            const Matrix& W = student.W[static_cast<std::size_t>(p)];
            for (int m = 0; m < M; ++m) {
                const auto& svd = svds[static_cast<std::size_t>(m)];
                for (int k = 0; k < K; ++k) {
                    const double s = svd.matrixU().col(k).dot(W * svd.matrixV().col(k));
                    out.state.w[static_cast<std::size_t>(p)](m, k) = s;
                    recon += s * svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
                }
            }
            residual_sq += (W - recon).squaredNorm();
        }
        for (int m : active) {
            if (m < 0 || m >= M) throw ConfigError("target teacher out of range");
            out.state.target.row(m) += svds[static_cast<std::size_t>(m)].singularValues().head(K).transpose();
        }
    }
    out.residual_norm = std::sqrt(residual_sq);
    out.student_norm = std::sqrt(norm_sq);
    return out;
}

} // namespace nta
