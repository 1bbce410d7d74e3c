#include "nta/curriculum.hpp"

#include <cmath>
#include <string>

namespace nta {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

// Orthonormal columns spanning a Gaussian draw; resamples the (probability
// zero) rank-deficient case.
Matrix orthonormal_columns(Eigen::Index dim, Eigen::Index count, std::mt19937_64& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        const Matrix g = gaussian(dim, count, rng);
        Eigen::HouseholderQR<Matrix> qr(g);
        const Matrix R = qr.matrixQR().topRows(count).triangularView<Eigen::Upper>();
        if (R.diagonal().cwiseAbs().minCoeff() < 1e-10) continue;
        Matrix Q = qr.householderQ() * Matrix::Identity(dim, count);
        // Fix signs so that Q is a deterministic function of the draw.
        for (Eigen::Index k = 0; k < count; ++k)
            if (R(k, k) < 0) Q.col(k) = -Q.col(k);
        return Q;
    }
    throw ConfigError("failed to draw linearly independent teacher rows");
}

// Lower-triangular factor of the Gram matrix (1 - s) I + s 11^T. Row m holds
// the mixing coefficients of teacher m; for two teachers this is
// (1, 0) and (s, sqrt(1 - s^2)).
Matrix similarity_mixing(int count, double s) {
    Matrix gram = Matrix::Constant(count, count, s);
    gram.diagonal().setOnes();
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw ConfigError("teacher similarity gives a singular Gram matrix");
    return llt.matrixL();
}

} // namespace

std::mt19937_64 SeedStreams::stream(std::uint64_t id) const {
    const std::uint64_t a = splitmix64(master_ ^ splitmix64(id));
    const std::uint64_t b = splitmix64(a + id);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

TeacherSet make_teachers(int count, int d_in, int d_out, double similarity, std::mt19937_64& rng,
                         Orthogonality orth) {
    if (count < 1 || d_in < 1 || d_out < 1) throw ConfigError("teacher dimensions must be positive");
    if (count > d_in) throw ConfigError("cannot orthogonalize " + std::to_string(count) + " rows in d_in=" +
                                        std::to_string(d_in));
    if (orth == Orthogonality::Full && count * d_out > d_in) {
        throw ConfigError("full orthogonality needs M * d_out <= d_in");
    }
    if (similarity < 0.0 || similarity >= 1.0) throw ConfigError("teacher similarity must lie in [0, 1)");

    const Matrix mix = similarity_mixing(count, similarity);
    TeacherSet set;
    set.d_in = d_in;
    set.d_out = d_out;
    set.similarity = similarity;
    set.W.assign(static_cast<std::size_t>(count), Matrix::Zero(d_out, d_in));

    Matrix full;
    if (orth == Orthogonality::Full) full = orthonormal_columns(d_in, count * d_out, rng);

    for (int i = 0; i < d_out; ++i) {
        Matrix basis(d_in, count);
        if (orth == Orthogonality::Full) {
            for (int k = 0; k < count; ++k) basis.col(k) = full.col(k * d_out + i);
        } else {
            basis = orthonormal_columns(d_in, count, rng);
        }
        const Matrix rows = mix * basis.transpose();
        for (int m = 0; m < count; ++m) {
            set.W[static_cast<std::size_t>(m)].row(i) = rows.row(m).normalized();
        }
    }
    return set;
}

std::string task_letter(int m) {
    if (m >= 0 && m < 26) return std::string(1, static_cast<char>('A' + m));
    return "T" + std::to_string(m);
}

TaskSpec single_task(const TeacherSet& teachers, int m) {
    if (m < 0 || m >= teachers.count()) throw ConfigError("teacher index out of range");
    TaskSpec t;
    t.kind = TaskSpec::Kind::Single;
    t.members = {m};
    t.teacher = teachers[m];
    t.label = task_letter(m);
    return t;
}

TaskSpec sum_task(const TeacherSet& teachers, std::vector<int> members) {
    if (members.empty()) throw ConfigError("sum task needs at least one teacher");
    TaskSpec t;
    t.kind = TaskSpec::Kind::Sum;
    t.teacher = Matrix::Zero(teachers.d_out, teachers.d_in);
    for (int m : members) {
        if (m < 0 || m >= teachers.count()) throw ConfigError("teacher index out of range");
        t.teacher += teachers[m];
        if (!t.label.empty()) t.label += "+";
        t.label += task_letter(m);
    }
    t.members = std::move(members);
    return t;
}

TaskSpec interleave_task(const TeacherSet& teachers, std::vector<int> row_source) {
    if (static_cast<int>(row_source.size()) != teachers.d_out) {
        throw ConfigError("row assignment must cover every output row");
    }
    TaskSpec t;
    t.kind = TaskSpec::Kind::RowInterleave;
    t.teacher = Matrix::Zero(teachers.d_out, teachers.d_in);
    for (int i = 0; i < teachers.d_out; ++i) {
        const int m = row_source[static_cast<std::size_t>(i)];
        if (m < 0 || m >= teachers.count()) throw ConfigError("teacher index out of range");
        t.teacher.row(i) = teachers[m].row(i);
        bool seen = false;
        for (int x : t.members) seen = seen || x == m;
        if (!seen) t.members.push_back(m);
    }
    for (int m : t.members) t.label += task_letter(m);
    t.label += "|rows";
    t.row_source = std::move(row_source);
    return t;
}

std::vector<TaskSpec> make_composite_tasks(const TeacherSet& teachers, CompositionMode mode) {
    if (teachers.count() < 2) throw ConfigError("composition needs at least two teachers");
    std::vector<TaskSpec> out;
    for (int a = 0; a < teachers.count(); ++a) {
        for (int b = a + 1; b < teachers.count(); ++b) {
            if (mode == CompositionMode::Task) {
                out.push_back(sum_task(teachers, {a, b}));
            } else {
                std::vector<int> rows(static_cast<std::size_t>(teachers.d_out));
                for (int i = 0; i < teachers.d_out; ++i) rows[static_cast<std::size_t>(i)] = (i % 2 == 0) ? a : b;
                out.push_back(interleave_task(teachers, std::move(rows)));
            }
        }
    }
    return out;
}

double BlockSchedule::total_time() const {
    double t = 0.0;
    for (const auto& ph : phases) t += ph.duration();
    return t;
}

int BlockSchedule::total_blocks() const {
    int n = 0;
    for (const auto& ph : phases) n += ph.n_blocks;
    return n;
}

double BlockSchedule::block_start(int block) const {
    double t = 0.0;
    for (const auto& ph : phases) {
        if (block < ph.n_blocks) return t + block * ph.tau_B;
        block -= ph.n_blocks;
        t += ph.duration();
    }
    return t;
}

BlockSchedule alternating_schedule(std::vector<TaskSpec> tasks, double tau_B, int n_blocks) {
    if (tasks.empty()) throw ConfigError("schedule needs at least one task");
    if (!(tau_B > 0.0) || n_blocks < 1) throw ConfigError("block length and count must be positive");
    BlockSchedule s;
    s.phases.push_back(SchedulePhase{"train", std::move(tasks), tau_B, n_blocks});
    return s;
}

ActiveTask active_task(const BlockSchedule& schedule, double t) {
    if (!(t >= 0.0) || t >= schedule.total_time()) {
        throw std::out_of_range("time " + std::to_string(t) + " outside schedule [0, " +
                                std::to_string(schedule.total_time()) + ")");
    }
    double start = 0.0;
    int block_offset = 0;
    for (std::size_t ph = 0; ph < schedule.phases.size(); ++ph) {
        const auto& phase = schedule.phases[ph];
        const double local = t - start;
        if (local < phase.duration() || ph + 1 == schedule.phases.size()) {
            // Tolerance keeps exact boundaries such as 0.3 / 0.1 on the later block.
            int k = static_cast<int>(std::floor(local / phase.tau_B + 1e-9));
            if (k >= phase.n_blocks) k = phase.n_blocks - 1;
            ActiveTask a;
            a.phase = static_cast<int>(ph);
            a.block = block_offset + k;
            a.task_index = k % static_cast<int>(phase.tasks.size());
            a.task = &phase.tasks[static_cast<std::size_t>(a.task_index)];
            a.time_in_block = std::max(0.0, local - k * phase.tau_B);
            return a;
        }
        start += phase.duration();
        block_offset += phase.n_blocks;
    }
    throw std::out_of_range("empty schedule");
}

ActiveTask active_task_at_step(const BlockSchedule& schedule, long step, double dt) {
    long offset = 0;
    int block_offset = 0;
    for (std::size_t ph = 0; ph < schedule.phases.size(); ++ph) {
        const auto& phase = schedule.phases[ph];
        const long per_block = std::max(1L, std::lround(phase.tau_B / dt));
        const long steps = per_block * phase.n_blocks;
        if (step - offset < steps) {
            const long local = step - offset;
            const int k = static_cast<int>(local / per_block);
            ActiveTask a;
            a.phase = static_cast<int>(ph);
            a.block = block_offset + k;
            a.task_index = k % static_cast<int>(phase.tasks.size());
            a.task = &phase.tasks[static_cast<std::size_t>(a.task_index)];
            a.time_in_block = static_cast<double>(local - k * per_block) * dt;
            return a;
        }
        offset += steps;
        block_offset += phase.n_blocks;
    }
    throw std::out_of_range("step " + std::to_string(step) + " beyond schedule");
}

Batch sample_batch(const TaskSpec& task, int batch_size, std::mt19937_64& rng) {
    if (batch_size < 0) throw ConfigError("batch size must be nonnegative");
    if (batch_size == 0) return expectation_batch(task.teacher);
    Batch b;
    b.teacher = task.teacher;
    b.X = gaussian(task.teacher.cols(), batch_size, rng);
    b.Y = task.teacher * b.X;
    return b;
}

} // namespace nta
