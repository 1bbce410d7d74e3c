#pragma once

// Teachers, task composition, blocked schedules and batch sampling.

#include "nta/model.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace nta {

/// Independent generators derived from one master seed. Changing how many
/// batches are drawn never changes the teachers or the initial student.
class SeedStreams {
public:
    explicit SeedStreams(std::uint64_t master) : master_(master) {}

    std::mt19937_64 teachers() const { return stream(1); }
    std::mt19937_64 init() const { return stream(2); }
    std::mt19937_64 batches() const { return stream(3); }
    std::mt19937_64 stream(std::uint64_t id) const;

    std::uint64_t master() const { return master_; }

private:
    std::uint64_t master_;
};

enum class Orthogonality {
    /// Corresponding rows of distinct teachers are orthogonal.
    PerRow,
    /// All rows of all teachers are orthonormal (needs M * d_out <= d_in).
    Full
};

TeacherSet make_teachers(int count, int d_in, int d_out, double similarity, std::mt19937_64& rng,
                         Orthogonality orth = Orthogonality::PerRow);

struct TaskSpec {
    enum class Kind { Single, Sum, RowInterleave };

    Kind kind = Kind::Single;
    /// Teachers taking part (one for Single, the summands for Sum).
    std::vector<int> members;
    /// RowInterleave only: teacher index supplying each output row.
    std::vector<int> row_source;
    Matrix teacher;
    std::string label;
};

TaskSpec single_task(const TeacherSet& teachers, int m);
TaskSpec sum_task(const TeacherSet& teachers, std::vector<int> members);
TaskSpec interleave_task(const TeacherSet& teachers, std::vector<int> row_source);

enum class CompositionMode { Task, Subtask };

/// Pairwise compositions of three teachers: sums A+B, A+C, B+C, or row
/// interleavings with even rows from the first and odd rows from the second.
std::vector<TaskSpec> make_composite_tasks(const TeacherSet& teachers, CompositionMode mode);

std::string task_letter(int m);

struct SchedulePhase {
    std::string name;
    std::vector<TaskSpec> tasks;
    double tau_B = 1.0;
    int n_blocks = 0;

    double duration() const { return tau_B * n_blocks; }
};

struct BlockSchedule {
    std::vector<SchedulePhase> phases;

    double total_time() const;
    int total_blocks() const;
    /// Start time of a global block index.
    double block_start(int block) const;
};

BlockSchedule alternating_schedule(std::vector<TaskSpec> tasks, double tau_B, int n_blocks);

struct ActiveTask {
    const TaskSpec* task = nullptr;
    int block = 0;       // global block index
    int phase = 0;
    int task_index = 0;  // index into the phase's task list
    double time_in_block = 0.0;
};

/// Block lookup; t must lie in [0, total_time).
ActiveTask active_task(const BlockSchedule& schedule, double t);

/// Block lookup from an integer step count; avoids floating drift in long runs.
ActiveTask active_task_at_step(const BlockSchedule& schedule, long step, double dt);

/// X ~ N(0, 1) with B columns, Y* = teacher X. B == 0 gives an expectation batch.
Batch sample_batch(const TaskSpec& task, int batch_size, std::mt19937_64& rng);

} // namespace nta
