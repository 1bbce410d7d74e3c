#pragma once

// Experiment drivers: curricula for every model kind, grid sweeps and the
// analysis runs built on top of them.

#include "nta/config.hpp"
#include "nta/deep.hpp"
#include "nta/metrics.hpp"
#include "nta/record.hpp"
#include "nta/reduced.hpp"

#include <functional>
#include <string>
#include <vector>

namespace nta {

struct RunResult {
    RunConfig config;
    TeacherSet teachers;
    BlockSchedule schedule;
    RunRecord record;

    GatedStudent student;
    TwoLayerNet net;
    ReducedState reduced;

    /// Gates at the end of every block (gated model), P x 1 or P x d_out.
    std::vector<Matrix> gate_snapshots;
    /// Raw and sorted second layer at the end of every block (deep model).
    std::vector<Matrix> w2_snapshots;
    std::vector<Matrix> w2_sorted_snapshots;
    /// Emergent gates of the sorted students at block ends (deep model).
    std::vector<Vector> emergent_gate_snapshots;
    std::vector<Vector> diagonal_gate_snapshots;

    double final_total_alignment = 0.0;
    std::vector<ThresholdCrossing> time_to_threshold;
};

TeacherSet build_teachers(const RunConfig& cfg);
BlockSchedule build_schedule(const RunConfig& cfg, const TeacherSet& teachers);
GatedStudent build_student(const RunConfig& cfg);
TwoLayerNet build_two_layer(const RunConfig& cfg);

/// Integrates the configured model over the whole schedule with cfg.seed.
/// A numerical blow-up ends the run early with record.aborted set.
RunResult run_curriculum(const RunConfig& cfg);

/// Gated model from a given initial student.
RunResult run_gated(const RunConfig& cfg, const TeacherSet& teachers, const BlockSchedule& schedule,
                    GatedStudent student);

/// Mean and standard error across seeds of one record column, aligned by row.
struct SeedAverage {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> stderr_;
};
SeedAverage average_column(const std::vector<RunResult>& runs, const std::string& column);

/// Runs seeds cfg.seed .. cfg.seed + cfg.seeds - 1 on a worker pool; results in seed order.
std::vector<RunResult> run_seeds(const RunConfig& cfg, int workers = 0);

/// Executes jobs 0..n-1 on up to `workers` threads (0 = hardware concurrency).
void parallel_for(int n, int workers, const std::function<void(int)>& job);

// ---- Reduced-model trajectories ----

struct ReducedRun {
    RunRecord record;
    std::vector<ReducedState> states;  // one per logged row
};

/// Integrates a reduced state over a schedule; each block's target is set from
/// the task's member teachers.
ReducedRun run_reduced_schedule(ReducedState state, const BlockSchedule& schedule, const RegularizerConfig& reg,
                                double dt, int stride);

/// Integrates from the specialized state with teacher 2 active for `duration`.
ReducedRun run_reduced_switch(double tau_w, double tau_c, const RegularizerConfig& reg, double dt, double duration,
                              int stride = 1);

struct ExactCheck {
    double tau_c = 0.0;
    /// Largest |wbar - exact_wbar(cbar)| along the trajectory.
    double max_deviation = 0.0;
    double final_loss = 0.0;
    /// First time the task loss drops below 1e-2 (-1 if never).
    double time_to_fit = -1.0;
    ReducedRun run;
};

std::vector<ExactCheck> exact_check(const std::vector<double>& tau_cs, double tau_w, const RegularizerConfig& reg,
                                    double dt, double duration);

// ---- Full versus reduced ----

struct FullVsReduced {
    RunRecord full;
    RunRecord reduced;
    double loss_sup = 0.0;
    double gate_sup = 0.0;
    /// Largest deviation of any projected weight coordinate.
    double weight_sup = 0.0;
    double final_residual_fraction = 0.0;
};

/// Steps the full model and the row-basis reduced model in lockstep from the
/// projection of the same initial student.
FullVsReduced full_vs_reduced(const RunConfig& cfg);

// ---- Grid sweeps ----

struct SweepCell {
    int ix = 0;
    int iy = 0;
    double x = 0.0;
    double y = 0.0;
    std::uint64_t seed = 0;
    double total_alignment = 0.0;
    bool failed = false;
    std::string error;
    double dt = 0.0;
    int n_blocks = 0;
};

struct SweepResult {
    std::string x_name;
    std::string y_name;
    std::vector<double> xs;
    std::vector<double> ys;
    /// Cell order: x index, then y index, then seed.
    std::vector<SweepCell> cells;

    double mean(int ix, int iy) const;
};

std::vector<double> sweep_axis(const RunConfig& cfg, const std::string& axis);
/// Configuration of one cell: block length snapped so the total time is
/// exact, dt shrunk to resolve the fastest timescale and the block.
RunConfig sweep_cell_config(const RunConfig& base, const std::string& x_name, double x, const std::string& y_name,
                            double y);
SweepResult grid_sweep(const RunConfig& cfg, int workers = 0);

// ---- Analysis runs ----

/// Final total alignment of a finished run (sorted students for the deep
/// model, per-row matching for per-neuron gates).
double final_alignment(const RunResult& run);

struct GeneralizationSummary {
    int boundary_block = 0;
    bool first_composite_reached = false;
    double first_composite_time = 0.0;
    /// Gate vector (mean over rows for per-neuron gates) at the end of the
    /// last block of each composite task.
    std::vector<std::string> composite_labels;
    std::vector<Vector> composite_gates;
};

GeneralizationSummary summarize_generalization(const RunResult& run);

struct GateCount {
    int active = 0;
    int decayed = 0;
    /// Largest value each gate takes at the ends of the last |tasks| blocks.
    Vector peak;
};

/// Counts gates above `active` or below `decayed` at the last block ends.
GateCount count_gates(const RunResult& run, double active = 0.5, double decayed = 0.1);

/// Mean assigned pair alignment minus mean unassigned pair alignment.
double specialization_index(const std::vector<Matrix>& students, const TeacherSet& teachers);

struct BlockLengthGrowth {
    double tau_B = 0.0;
    double growth = 0.0;  // mean wbar(T) - wbar(0) across seeds
};

/// Reduced-model specialization growth over a fixed total time for each block length.
std::vector<BlockLengthGrowth> blocklength_growth(const RunConfig& cfg, const std::vector<double>& tau_Bs);

/// Loss at the end of each block averaged over the seeds.
std::vector<double> block_end_loss(const std::vector<RunResult>& runs);

/// Loss at fixed offsets after each block switch: rows are blocks.
std::vector<std::vector<double>> post_switch_loss(const RunRecord& record, const std::vector<double>& offsets);

} // namespace nta
