#include "nta/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace nta {

namespace {

std::string idx(int k) { return std::to_string(k + 1); }

long steps_per_block(const SchedulePhase& phase, double dt) { return std::max(1L, std::lround(phase.tau_B / dt)); }

long total_steps(const BlockSchedule& schedule, double dt) {
    long n = 0;
    for (const auto& ph : schedule.phases) n += steps_per_block(ph, dt) * ph.n_blocks;
    return n;
}

std::vector<BlockInfo> block_infos(const BlockSchedule& schedule, double dt) {
    std::vector<BlockInfo> out;
    long offset = 0;
    int b = 0;
    for (std::size_t ph = 0; ph < schedule.phases.size(); ++ph) {
        const auto& phase = schedule.phases[ph];
        const long per = steps_per_block(phase, dt);
        for (int k = 0; k < phase.n_blocks; ++k, ++b) {
            BlockInfo info;
            info.index = b;
            info.phase = static_cast<int>(ph);
            info.start = static_cast<double>(offset + k * per) * dt;
            info.length = static_cast<double>(per) * dt;
            info.task = phase.tasks[static_cast<std::size_t>(k) % phase.tasks.size()].label;
            out.push_back(info);
        }
        offset += per * phase.n_blocks;
    }
    return out;
}

// Tasks of all phases flattened, for the numeric task column.
int task_code(const BlockSchedule& schedule, const ActiveTask& a) {
    int code = 0;
    for (int ph = 0; ph < a.phase; ++ph) code += static_cast<int>(schedule.phases[static_cast<std::size_t>(ph)].tasks.size());
    return code + a.task_index;
}

std::string task_list(const BlockSchedule& schedule) {
    std::string out;
    for (const auto& ph : schedule.phases)
        for (const auto& t : ph.tasks) out += (out.empty() ? "" : ",") + t.label;
    return out;
}

bool reducible(const RunConfig& cfg, const GatedStudent& s) {
    return s.mode == GateMode::PerPath && cfg.paths == 2 && cfg.teachers == 2 && cfg.similarity == 0.0;
}

std::vector<Matrix> sorted_students(const TwoLayerNet& net, const TeacherSet& teachers, SortResult* keep = nullptr) {
    SortResult r = sort_students(net, teachers);
    std::vector<Matrix> out = r.students;
    if (keep) *keep = std::move(r);
    return out;
}

double alignment_of(const RunConfig& cfg, const std::vector<Matrix>& students, const TeacherSet& teachers,
                    GateMode mode) {
    (void)cfg;
    if (mode == GateMode::PerNeuron) return row_sorted_alignment(students, teachers);
    return total_alignment(students, teachers);
}

void finish(RunResult& r) {
    r.record.blocks = block_infos(r.schedule, r.config.dt);
    r.record.meta["preset"] = r.config.preset;
    r.record.meta["seed"] = std::to_string(r.config.seed);
    r.record.meta["tasks"] = task_list(r.schedule);
    if (r.record.has("loss_task")) r.time_to_threshold = time_to_threshold(r.record, r.config.threshold);
    if (r.record.has("total_alignment") && !r.record.empty()) {
        r.final_total_alignment = r.record.rows().back()[r.record.index("total_alignment")];
    }
}

void mark_abort(RunResult& r, const NumericalAbort& e, double t, int block) {
    r.record.aborted = true;
    r.record.abort_message = std::string(e.what()) + " (parameter " + e.parameter() + ", t=" + std::to_string(t) +
                             ", block=" + std::to_string(block) + ")";
}

RunResult run_deep(const RunConfig& cfg, const TeacherSet& teachers, const BlockSchedule& schedule) {
    RunResult r;
    r.config = cfg;
    r.teachers = teachers;
    r.schedule = schedule;
    r.net = build_two_layer(cfg);
    const int M = teachers.count();

    std::vector<std::string> cols = {"t", "block", "phase", "task", "loss_task", "loss_reg"};
    for (int m = 0; m < M; ++m) cols.push_back("g" + idx(m));
    for (int m = 0; m < M; ++m) cols.push_back("gd" + idx(m));
    for (int p = 0; p < M; ++p)
        for (int m = 0; m < M; ++m) cols.push_back("a" + idx(p) + "_" + idx(m));
    for (const char* c : {"total_alignment", "dW1", "dW2", "gW1", "gW2"}) cols.emplace_back(c);
    r.record = RunRecord(cols);

    const RegularizerConfig reg = cfg.effective_reg();
    r.net.tau_w2 = cfg.effective_tau_c();
    std::mt19937_64 rng = SeedStreams(cfg.seed).batches();
    const double dt = cfg.dt;
    const long n = total_steps(schedule, dt);

    auto log_row = [&](long step, const ActiveTask& a, const DeepStepNorms& norms) {
        SortResult sr;
        const std::vector<Matrix> students = sorted_students(r.net, teachers, &sr);
        std::vector<double> row = {static_cast<double>(step) * dt, static_cast<double>(a.block),
                                   static_cast<double>(a.phase), static_cast<double>(task_code(schedule, a)),
                                   deep_population_loss(r.net, a.task->teacher), deep_reg_loss(r.net, reg)};
        for (int m = 0; m < M; ++m) row.push_back(sr.gates[m]);
        for (int m = 0; m < M; ++m) row.push_back(sr.diagonal_gates[m]);
        const Matrix pairs = pair_alignment(students, teachers);
        for (int p = 0; p < M; ++p)
            for (int m = 0; m < M; ++m) row.push_back(pairs(p, m));
        row.push_back(total_alignment(students, teachers));
        row.insert(row.end(), {norms.dW1, norms.dW2, norms.gW1, norms.gW2});
        r.record.append(std::move(row));
    };
    auto snapshot = [&] {
        SortResult sr = sort_students(r.net, teachers);
        r.w2_snapshots.push_back(r.net.W2);
        r.w2_sorted_snapshots.push_back(sr.sorted_W2);
        r.emergent_gate_snapshots.push_back(sr.gates);
        r.diagonal_gate_snapshots.push_back(sr.diagonal_gates);
    };

    ActiveTask a;
    for (long step = 0; step < n; ++step) {
        a = active_task_at_step(schedule, step, dt);
        if (step > 0 && a.time_in_block == 0.0) snapshot();
        const Batch batch = sample_batch(*a.task, cfg.batch_size, rng);
        const bool log = step % cfg.stride == 0 || a.time_in_block == 0.0;
        DeepStepNorms norms;
        TwoLayerNet before;
        if (log) before = r.net;
        try {
            norms = apply_deep_step(r.net, batch, reg, dt);
        } catch (const NumericalAbort& e) {
            mark_abort(r, e, static_cast<double>(step) * dt, a.block);
            finish(r);
            return r;
        }
        if (log) {
            std::swap(before, r.net);
            log_row(step, a, norms);
            std::swap(before, r.net);
        }
    }
    snapshot();
    log_row(n, a, DeepStepNorms{});
    finish(r);
    return r;
}

RunResult run_reduced_model(const RunConfig& cfg, const TeacherSet& teachers, const BlockSchedule& schedule) {
    RunResult r;
    r.config = cfg;
    r.teachers = teachers;
    r.schedule = schedule;
    std::mt19937_64 rng = SeedStreams(cfg.seed).init();
    std::normal_distribution<double> normal(0.0, cfg.sigma / std::sqrt(static_cast<double>(cfg.d_in)));
    Eigen::Vector2d w1, w2;
    w1 << normal(rng), normal(rng);
    w2 << normal(rng), normal(rng);
    ReducedState s = make_reduced_2d(w1, w2, {0.5, 0.5}, 0, cfg.tau_w, cfg.effective_tau_c());
    ReducedRun run = run_reduced_schedule(s, schedule, cfg.effective_reg(), cfg.dt, cfg.stride);
    r.record = std::move(run.record);
    r.reduced = run.states.empty() ? s : run.states.back();
    finish(r);
    return r;
}

} // namespace

TeacherSet build_teachers(const RunConfig& cfg) {
    std::mt19937_64 rng = SeedStreams(cfg.seed).teachers();
    if (cfg.model == ModelKind::Reduced) {
        TeacherSet t;
        t.d_in = 1;
        t.d_out = 2;
        t.W = {Matrix::Identity(2, 2).col(0), Matrix::Identity(2, 2).col(1)};
        return t;
    }
    return make_teachers(cfg.teachers, cfg.d_in, cfg.d_out, cfg.similarity, rng, cfg.orthogonality);
}

BlockSchedule build_schedule(const RunConfig& cfg, const TeacherSet& teachers) {
    std::vector<TaskSpec> singles;
    for (int m = 0; m < teachers.count(); ++m) singles.push_back(single_task(teachers, m));
    switch (cfg.curriculum) {
    case CurriculumKind::Alternate:
        return alternating_schedule(singles, cfg.tau_B, cfg.n_blocks);
    case CurriculumKind::Sums:
        return alternating_schedule(make_composite_tasks(teachers, CompositionMode::Task), cfg.tau_B, cfg.n_blocks);
    case CurriculumKind::Composition: {
        BlockSchedule s;
        if (cfg.train_blocks > 0) s.phases.push_back({"train", singles, cfg.tau_B, cfg.train_blocks});
        if (cfg.n_blocks > cfg.train_blocks) {
            s.phases.push_back({"new-tasks", make_composite_tasks(teachers, cfg.composition), cfg.tau_B,
                                cfg.n_blocks - cfg.train_blocks});
        }
        return s;
    }
    }
    throw ConfigError("unknown curriculum");
}

GatedStudent build_student(const RunConfig& cfg) {
    std::mt19937_64 rng = SeedStreams(cfg.seed).init();
    GatedStudent s =
        make_student(cfg.paths, cfg.d_in, cfg.d_out, cfg.gate_mode, cfg.sigma, cfg.tau_w, cfg.effective_tau_c(), rng);
    s.units = cfg.rate_units;
    return s;
}

TwoLayerNet build_two_layer(const RunConfig& cfg) {
    std::mt19937_64 rng = SeedStreams(cfg.seed).init();
    return make_two_layer(cfg.d_in, cfg.d_hid, cfg.d_out, cfg.sigma, cfg.tau_w, cfg.effective_tau_c(), rng);
}

RunResult run_curriculum(const RunConfig& cfg) {
    cfg.validate();
    const TeacherSet teachers = build_teachers(cfg);
    const BlockSchedule schedule = build_schedule(cfg, teachers);
    switch (cfg.model) {
    case ModelKind::Gated:
        return run_gated(cfg, teachers, schedule, build_student(cfg));
    case ModelKind::Deep:
        return run_deep(cfg, teachers, schedule);
    case ModelKind::Reduced:
        return run_reduced_model(cfg, teachers, schedule);
    }
    throw ConfigError("unknown model");
}

RunResult run_gated(const RunConfig& cfg, const TeacherSet& teachers, const BlockSchedule& schedule,
                    GatedStudent student) {
    RunResult r;
    r.config = cfg;
    r.teachers = teachers;
    r.schedule = schedule;
    const int P = student.paths();
    const int M = teachers.count();
    const bool per_neuron = student.mode == GateMode::PerNeuron;
    const bool spec = reducible(cfg, student);

    std::vector<std::string> cols = {"t", "block", "phase", "task", "loss_task", "loss_reg", "loss_batch"};
    for (int p = 0; p < P; ++p) {
        if (per_neuron) {
            for (int i = 0; i < student.d_out(); ++i) cols.push_back("c" + idx(p) + "_" + idx(i));
        } else {
            cols.push_back("c" + idx(p));
        }
    }
    for (int p = 0; p < P; ++p)
        for (int m = 0; m < M; ++m) cols.push_back("a" + idx(p) + "_" + idx(m));
    cols.emplace_back("total_alignment");
    for (int p = 0; p < P; ++p) cols.push_back("dW" + idx(p));
    cols.emplace_back("dc");
    if (spec) {
        for (const char* c : {"wbar", "cbar", "wbarbar", "residual"}) cols.emplace_back(c);
    }
    r.record = RunRecord(cols);

    const RegularizerConfig reg = cfg.effective_reg();
    std::mt19937_64 rng = SeedStreams(cfg.seed).batches();
    const double dt = cfg.dt;
    const long n = total_steps(schedule, dt);

    auto log_row = [&](long step, const ActiveTask& a, double batch_loss, const StepNorms& norms) {
        std::vector<double> row = {static_cast<double>(step) * dt, static_cast<double>(a.block),
                                   static_cast<double>(a.phase), static_cast<double>(task_code(schedule, a)),
                                   population_loss(student, a.task->teacher), reg_loss(student, reg), batch_loss};
        for (int p = 0; p < P; ++p) {
            if (per_neuron) {
                for (int i = 0; i < student.d_out(); ++i) row.push_back(student.gates(p, i));
            } else {
                row.push_back(student.gates(p, 0));
            }
        }
        const Matrix pairs = pair_alignment(student.W, teachers);
        for (int p = 0; p < P; ++p)
            for (int m = 0; m < M; ++m) row.push_back(pairs(p, m));
        row.push_back(alignment_of(cfg, student.W, teachers, student.mode));
        for (int p = 0; p < P; ++p) row.push_back(norms.dW.empty() ? 0.0 : norms.dW[static_cast<std::size_t>(p)]);
        row.push_back(norms.dc);
        if (spec) {
            const Projection pr = project_full(student, teachers, a.task->members, ProjectionBasis::Rows, true);
            const SpecCoords sc = spec_coords(pr.state);
            row.insert(row.end(), {sc.wbar, sc.cbar, sc.wbarbar,
                                   pr.student_norm > 0.0 ? pr.residual_norm / pr.student_norm : 0.0});
        }
        r.record.append(std::move(row));
    };

    ActiveTask a;
    for (long step = 0; step < n; ++step) {
        a = active_task_at_step(schedule, step, dt);
        if (step > 0 && a.time_in_block == 0.0) r.gate_snapshots.push_back(student.gates);
        const Batch batch = sample_batch(*a.task, cfg.batch_size, rng);
        const bool log = step % cfg.stride == 0 || a.time_in_block == 0.0;
        GatedStudent before;
        double batch_loss = 0.0;
        if (log) {
            before = student;
            batch_loss = task_loss(student, batch);
        }
        StepNorms norms;
        try {
            norms = apply_euler_step(student, batch, reg, dt);
        } catch (const NumericalAbort& e) {
            mark_abort(r, e, static_cast<double>(step) * dt, a.block);
            r.student = student;
            finish(r);
            return r;
        }
        if (log) {
            std::swap(before, student);
            log_row(step, a, batch_loss, norms);
            std::swap(before, student);
        }
    }
    r.gate_snapshots.push_back(student.gates);
    log_row(n, a, std::numeric_limits<double>::quiet_NaN(), StepNorms{});
    r.student = std::move(student);
    finish(r);
    return r;
}

SeedAverage average_column(const std::vector<RunResult>& runs, const std::string& column) {
    SeedAverage avg;
    if (runs.empty()) return avg;
    std::size_t rows = runs.front().record.size();
    for (const auto& r : runs) rows = std::min(rows, r.record.size());
    const std::vector<double> t = runs.front().record.column("t");
    avg.t.assign(t.begin(), t.begin() + static_cast<long>(rows));
    avg.mean.assign(rows, 0.0);
    avg.stderr_.assign(rows, 0.0);
    std::vector<std::vector<double>> cols;
    for (const auto& r : runs) cols.push_back(r.record.column(column));
    const double n = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0, sq = 0.0;
        for (const auto& c : cols) {
            s += c[i];
            sq += c[i] * c[i];
        }
        avg.mean[i] = s / n;
        if (runs.size() > 1) {
            const double var = std::max(0.0, (sq - s * s / n) / (n - 1.0));
            avg.stderr_[i] = std::sqrt(var / n);
        }
    }
    return avg;
}

void parallel_for(int n, int workers, const std::function<void(int)>& job) {
    if (n <= 0) return;
    if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<RunResult> run_seeds(const RunConfig& cfg, int workers) {
    cfg.validate();
    std::vector<RunResult> out(static_cast<std::size_t>(cfg.seeds));
    parallel_for(cfg.seeds, workers, [&](int k) {
        RunConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(k);
        out[static_cast<std::size_t>(k)] = run_curriculum(c);
    });
    return out;
}

ReducedRun run_reduced_schedule(ReducedState state, const BlockSchedule& schedule, const RegularizerConfig& reg,
                                double dt, int stride) {
    ReducedRun out;
    const bool two_d = state.paths() == 2 && state.components() == 2;
    std::vector<std::string> cols = {"t", "block", "phase", "task", "loss_task", "loss_reg"};
    for (int p = 0; p < state.paths(); ++p) cols.push_back("c" + idx(p));
    if (two_d) {
        for (const char* c : {"w11", "w12", "w21", "w22", "wbar", "cbar", "wbarbar", "eps1", "eps2"}) cols.emplace_back(c);
    }
    cols.emplace_back("ntk_rate");
    out.record = RunRecord(cols);

    auto log_row = [&](long step, const ActiveTask& a) {
        std::vector<double> row = {static_cast<double>(step) * dt, static_cast<double>(a.block),
                                   static_cast<double>(a.phase), static_cast<double>(task_code(schedule, a)),
                                   reduced_loss(state), gate_group_reg_loss(state.c, reg)};
        for (int p = 0; p < state.paths(); ++p) row.push_back(state.c[p]);
        if (two_d) {
            const Vector w1 = state.w[0].rowwise().mean();
            const Vector w2 = state.w[1].rowwise().mean();
            const Vector eps = state.error().rowwise().mean();
            const SpecCoords sc = spec_coords(state);
            row.insert(row.end(), {w1[0], w1[1], w2[0], w2[1], sc.wbar, sc.cbar, sc.wbarbar, eps[0], eps[1]});
        }
        row.push_back(ntk_descent_rate(state));
        out.record.append(std::move(row));
        out.states.push_back(state);
    };

    const long n = total_steps(schedule, dt);
    ActiveTask a;
    for (long step = 0; step < n; ++step) {
        a = active_task_at_step(schedule, step, dt);
        if (a.time_in_block == 0.0) set_target(state, a.task->members);
        if (step % stride == 0 || a.time_in_block == 0.0) log_row(step, a);
        try {
            apply_reduced_step(state, dt, reg);
        } catch (const NumericalAbort& e) {
            out.record.aborted = true;
            out.record.abort_message = std::string(e.what()) + " at t=" + std::to_string(static_cast<double>(step) * dt);
            break;
        }
    }
    if (!out.record.aborted) log_row(n, a);
    out.record.blocks = block_infos(schedule, dt);
    return out;
}

ReducedRun run_reduced_switch(double tau_w, double tau_c, const RegularizerConfig& reg, double dt, double duration,
                              int stride) {
    const ReducedState s = specialized_state(1, tau_w, tau_c);
    TeacherSet t;
    t.d_in = 1;
    t.d_out = 2;
    t.W = {Matrix::Identity(2, 2).col(0), Matrix::Identity(2, 2).col(1)};
    BlockSchedule schedule = alternating_schedule({single_task(t, 1)}, duration, 1);
    return run_reduced_schedule(s, schedule, reg, dt, stride);
}

std::vector<ExactCheck> exact_check(const std::vector<double>& tau_cs, double tau_w, const RegularizerConfig& reg,
                                    double dt, double duration) {
    std::vector<ExactCheck> out;
    for (double tc : tau_cs) {
        ExactCheck e;
        e.tau_c = tc;
        e.run = run_reduced_switch(tau_w, tc, reg, dt, duration);
        const auto t = e.run.record.column("t");
        const auto cbar = e.run.record.column("cbar");
        const auto wbar = e.run.record.column("wbar");
        const auto loss = e.run.record.column("loss_task");
        for (std::size_t i = 0; i < t.size(); ++i) {
            e.max_deviation = std::max(e.max_deviation, std::abs(wbar[i] - exact_wbar(cbar[i], tc, tau_w)));
            if (e.time_to_fit < 0.0 && loss[i] < 1e-2) e.time_to_fit = t[i];
        }
        e.final_loss = loss.empty() ? 0.0 : loss.back();
        out.push_back(std::move(e));
    }
    return out;
}

FullVsReduced full_vs_reduced(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.model != ModelKind::Gated || cfg.gate_mode != GateMode::PerPath) {
        throw ConfigError("full-vs-reduced needs the gated model with per-path gates");
    }
    const TeacherSet teachers = build_teachers(cfg);
    const BlockSchedule schedule = build_schedule(cfg, teachers);
    GatedStudent student = build_student(cfg);
    const RegularizerConfig reg = cfg.effective_reg();
    const double dt = cfg.dt;

    const ActiveTask first = active_task_at_step(schedule, 0, dt);
    ReducedState red = project_full(student, teachers, first.task->members).state;

    const bool two = cfg.paths == 2 && cfg.teachers == 2;
    std::vector<std::string> cols = {"t", "block", "loss_task"};
    for (int p = 0; p < cfg.paths; ++p) cols.push_back("c" + idx(p));
    if (two) {
        for (const char* c : {"wbar", "cbar", "wbarbar"}) cols.emplace_back(c);
    }
    FullVsReduced out;
    out.full = RunRecord(cols);
    out.reduced = RunRecord(cols);
    std::mt19937_64 rng = SeedStreams(cfg.seed).batches();

    auto row_of = [&](long step, const ActiveTask& a, double loss, const ReducedState& s) {
        std::vector<double> row = {static_cast<double>(step) * dt, static_cast<double>(a.block), loss};
        for (int p = 0; p < s.paths(); ++p) row.push_back(s.c[p]);
        if (two) {
            const SpecCoords sc = spec_coords(s);
            row.insert(row.end(), {sc.wbar, sc.cbar, sc.wbarbar});
        }
        return row;
    };

    const long n = total_steps(schedule, dt);
    ActiveTask a;
    Projection pr;
    for (long step = 0; step <= n; ++step) {
        if (step < n) {
            a = active_task_at_step(schedule, step, dt);
            if (a.time_in_block == 0.0) set_target(red, a.task->members);
        }
        pr = project_full(student, teachers, a.task->members);
        const double lf = population_loss(student, a.task->teacher);
        const double lr = reduced_loss(red);
        out.loss_sup = std::max(out.loss_sup, std::abs(lf - lr));
        out.gate_sup = std::max(out.gate_sup, (pr.state.c - red.c).cwiseAbs().maxCoeff());
        for (int p = 0; p < red.paths(); ++p) {
            const double d = (pr.state.w[static_cast<std::size_t>(p)] - red.w[static_cast<std::size_t>(p)]).cwiseAbs().maxCoeff();
            out.weight_sup = std::max(out.weight_sup, d);
        }
        if (step % cfg.stride == 0 || step == n || a.time_in_block == 0.0) {
            out.full.append(row_of(step, a, lf, pr.state));
            out.reduced.append(row_of(step, a, lr, red));
        }
        if (step == n) break;
        const Batch batch = sample_batch(*a.task, cfg.batch_size, rng);
        apply_euler_step(student, batch, reg, dt);
        apply_reduced_step(red, dt, reg);
    }
    out.final_residual_fraction = pr.student_norm > 0.0 ? pr.residual_norm / pr.student_norm : 0.0;
    out.full.blocks = out.reduced.blocks = block_infos(schedule, dt);
    return out;
}

// ---- Sweeps ----

double SweepResult::mean(int ix, int iy) const {
    double s = 0.0;
    int n = 0;
    for (const auto& c : cells) {
        if (c.ix == ix && c.iy == iy && !c.failed) {
            s += c.total_alignment;
            ++n;
        }
    }
    return n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> sweep_axis(const RunConfig& cfg, const std::string& axis) {
    const int n = cfg.grid_points;
    std::vector<double> out;
    auto logspace = [&](double lo, double hi) {
        for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    };
    if (axis == "tau_B") {
        logspace(cfg.block_min, cfg.block_max);
    } else if (axis == "ratio") {
        logspace(cfg.ratio_min, cfg.ratio_max);
    } else if (axis == "lambda") {
        for (int i = 0; i < n; ++i) out.push_back(cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * i / (n - 1));
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "' (tau_B, ratio, lambda)");
    }
    return out;
}

RunConfig sweep_cell_config(const RunConfig& base, const std::string& x_name, double x, const std::string& y_name,
                            double y) {
    RunConfig c = base;
    c.regime = Regime::Flexible;
    c.seeds = 1;
    c.curriculum = CurriculumKind::Alternate;
    c.n_blocks = 1;
    c.tau_B = c.total_time;
    auto apply = [&](const std::string& axis, double v) {
        if (axis == "tau_B") {
            c.n_blocks = std::max(1, static_cast<int>(std::lround(base.total_time / v)));
            c.tau_B = base.total_time / c.n_blocks;
        } else if (axis == "ratio") {
            c.tau_c = c.tau_w / v;
        } else if (axis == "lambda") {
            c.reg.norm_l1 = 0.0;
            c.reg.norm_l2 = 0.0;
            if (base.lambda_rule == "fc") {
                c.reg.nonneg = 10.0 * v / 11.0;
                c.reg.norm_l2 = 5.0 * v / 11.0;
            } else {
                c.reg.nonneg = 5.0 * v / 3.0;
                c.reg.norm_l1 = 25.0 * v / 6.0;
            }
        } else {
            throw ConfigError("unknown sweep axis '" + axis + "'");
        }
    };
    if (x_name == y_name) throw ConfigError("sweep axes must differ");
    apply(x_name, x);
    apply(y_name, y);
    if (x_name != "tau_B" && y_name != "tau_B") {
        c.n_blocks = std::max(1, static_cast<int>(std::lround(base.total_time / base.tau_B)));
        c.tau_B = base.total_time / c.n_blocks;
    }

    // Explicit Euler on the norm penalty is stable only for dt / tau_c < 2 / (lambda P).
    const int gates = c.model == ModelKind::Deep ? c.d_hid : c.paths;
    const double stiff = std::max(1.0, gates * (c.reg.norm_l1 + c.reg.norm_l2));
    const double fastest = std::min({c.tau_w, c.tau_c / stiff, c.tau_B});
    double dt = std::min(base.dt, base.max_dt_fraction * fastest);
    const long per_block = std::max(1L, static_cast<long>(std::ceil(c.tau_B / dt - 1e-9)));
    c.dt = c.tau_B / per_block;
    c.stride = static_cast<int>(std::min<long>(per_block, 1L << 30));
    return c;
}

SweepResult grid_sweep(const RunConfig& cfg, int workers) {
    cfg.validate();
    SweepResult out;
    out.x_name = cfg.sweep_x;
    out.y_name = cfg.sweep_y;
    out.xs = sweep_axis(cfg, cfg.sweep_x);
    out.ys = sweep_axis(cfg, cfg.sweep_y);
    for (int ix = 0; ix < static_cast<int>(out.xs.size()); ++ix) {
        for (int iy = 0; iy < static_cast<int>(out.ys.size()); ++iy) {
            for (int s = 0; s < cfg.seeds; ++s) {
                SweepCell c;
                c.ix = ix;
                c.iy = iy;
                c.x = out.xs[static_cast<std::size_t>(ix)];
                c.y = out.ys[static_cast<std::size_t>(iy)];
                c.seed = cfg.seed + static_cast<std::uint64_t>(s);
                out.cells.push_back(c);
            }
        }
    }
    parallel_for(static_cast<int>(out.cells.size()), workers, [&](int k) {
        SweepCell& cell = out.cells[static_cast<std::size_t>(k)];
        try {
            RunConfig c = sweep_cell_config(cfg, out.x_name, cell.x, out.y_name, cell.y);
            c.seed = cell.seed;
            cell.dt = c.dt;
            cell.n_blocks = c.n_blocks;
            if (out.x_name == "tau_B") cell.x = c.tau_B;
            if (out.y_name == "tau_B") cell.y = c.tau_B;
            const RunResult r = run_curriculum(c);
            if (r.record.aborted) {
                cell.failed = true;
                cell.error = r.record.abort_message;
            }
            cell.total_alignment = final_alignment(r);
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });
    return out;
}

// ---- Analysis ----

double final_alignment(const RunResult& run) {
    switch (run.config.model) {
    case ModelKind::Gated:
        return alignment_of(run.config, run.student.W, run.teachers, run.student.mode);
    case ModelKind::Deep:
        return total_alignment(sort_students(run.net, run.teachers).students, run.teachers);
    case ModelKind::Reduced:
        return run.final_total_alignment;
    }
    return 0.0;
}

GeneralizationSummary summarize_generalization(const RunResult& run) {
    GeneralizationSummary s;
    s.boundary_block = run.config.train_blocks;
    if (run.schedule.phases.empty()) return s;
    const std::size_t ph = run.schedule.phases.size() - 1;
    const auto& phase = run.schedule.phases[ph];
    if (static_cast<std::size_t>(s.boundary_block) < run.time_to_threshold.size()) {
        const auto& c = run.time_to_threshold[static_cast<std::size_t>(s.boundary_block)];
        s.first_composite_reached = c.reached;
        s.first_composite_time = c.time;
    }
    const int first = run.schedule.total_blocks() - phase.n_blocks;
    for (std::size_t j = 0; j < phase.tasks.size(); ++j) {
        int last = -1;
        for (int k = 0; k < phase.n_blocks; ++k)
            if (static_cast<std::size_t>(k) % phase.tasks.size() == j) last = first + k;
        if (last < 0 || static_cast<std::size_t>(last) >= run.gate_snapshots.size()) continue;
        s.composite_labels.push_back(phase.tasks[j].label);
        s.composite_gates.push_back(run.gate_snapshots[static_cast<std::size_t>(last)].rowwise().mean());
    }
    return s;
}

GateCount count_gates(const RunResult& run, double active, double decayed) {
    GateCount g;
    if (run.gate_snapshots.empty() || run.schedule.phases.empty()) return g;
    const std::size_t tasks = run.schedule.phases.back().tasks.size();
    const std::size_t n = run.gate_snapshots.size();
    const std::size_t from = n > tasks ? n - tasks : 0;
    g.peak = run.gate_snapshots[from].rowwise().mean();
    for (std::size_t k = from + 1; k < n; ++k) g.peak = g.peak.cwiseMax(run.gate_snapshots[k].rowwise().mean());
    for (Eigen::Index p = 0; p < g.peak.size(); ++p) {
        if (g.peak[p] > active) ++g.active;
        if (g.peak[p] < decayed) ++g.decayed;
    }
    return g;
}

double specialization_index(const std::vector<Matrix>& students, const TeacherSet& teachers) {
    const Matrix pairs = pair_alignment(students, teachers);
    const std::vector<int> a = optimal_assignment(pairs);
    double on = 0.0, off = 0.0;
    int n_on = 0, n_off = 0;
    for (int p = 0; p < pairs.rows(); ++p) {
        for (int m = 0; m < pairs.cols(); ++m) {
            if (a[static_cast<std::size_t>(p)] == m) {
                on += pairs(p, m);
                ++n_on;
            } else {
                off += pairs(p, m);
                ++n_off;
            }
        }
    }
    return (n_on ? on / n_on : 0.0) - (n_off ? off / n_off : 0.0);
}

std::vector<BlockLengthGrowth> blocklength_growth(const RunConfig& cfg, const std::vector<double>& tau_Bs) {
    TeacherSet t;
    t.d_in = 1;
    t.d_out = 2;
    t.W = {Matrix::Identity(2, 2).col(0), Matrix::Identity(2, 2).col(1)};
    const std::vector<TaskSpec> tasks = {single_task(t, 0), single_task(t, 1)};
    std::vector<BlockLengthGrowth> out;
    for (double tb : tau_Bs) {
        const int blocks = static_cast<int>(std::lround(cfg.total_time / tb));
        if (blocks < 1 || std::abs(blocks * tb - cfg.total_time) > 1e-9 * cfg.total_time) {
            throw ConfigError("block length must divide the total time");
        }
        const BlockSchedule schedule = alternating_schedule(tasks, tb, blocks);
        double sum = 0.0;
        for (int k = 0; k < cfg.seeds; ++k) {
            std::mt19937_64 rng = SeedStreams(cfg.seed + static_cast<std::uint64_t>(k)).init();
            std::normal_distribution<double> normal(0.0, cfg.sigma);
            Eigen::Vector2d w1, w2;
            w1 << 0.5 + normal(rng), 0.5 + normal(rng);
            w2 << 0.5 + normal(rng), 0.5 + normal(rng);
            const ReducedState s = make_reduced_2d(w1, w2, {0.5, 0.5}, 0, cfg.tau_w, cfg.tau_c);
            const ReducedRun run = run_reduced_schedule(s, schedule, cfg.effective_reg(), cfg.dt,
                                                        std::numeric_limits<int>::max());
            const double w0 = std::abs(spec_coords(run.states.front()).wbar);
            const double w1f = std::abs(spec_coords(run.states.back()).wbar);
            sum += w1f - w0;
        }
        out.push_back({tb, sum / cfg.seeds});
    }
    return out;
}

std::vector<double> block_end_loss(const std::vector<RunResult>& runs) {
    std::vector<double> out;
    if (runs.empty()) return out;
    const std::size_t blocks = runs.front().record.blocks.size();
    out.assign(blocks, 0.0);
    for (const auto& r : runs) {
        const auto b = r.record.column("block");
        const auto l = r.record.column("loss_task");
        std::vector<double> last(blocks, 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto k = static_cast<std::size_t>(b[i]);
            if (k < blocks) last[k] = l[i];
        }
        for (std::size_t k = 0; k < blocks; ++k) out[k] += last[k] / static_cast<double>(runs.size());
    }
    return out;
}

std::vector<std::vector<double>> post_switch_loss(const RunRecord& record, const std::vector<double>& offsets) {
    const auto t = record.column("t");
    const auto l = record.column("loss_task");
    std::vector<std::vector<double>> out;
    for (const auto& b : record.blocks) {
        std::vector<double> row;
        for (double off : offsets) {
            const double target = b.start + off;
            double v = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i] >= target - 1e-12) {
                    v = l[i];
                    break;
                }
            }
            row.push_back(v);
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace nta
