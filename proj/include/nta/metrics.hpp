#pragma once

// Alignment, timing and rank-speed measurements shared by the experiments.

#include "nta/model.hpp"
#include "nta/record.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace nta {

/// Entry (p, m): mean over rows i of cos(W^p row i, W*_m row i); zero-norm rows score 0.
Matrix pair_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers);

enum class AssignmentRule {
    /// Injective matching maximizing the summed score (exhaustive search).
    Optimal,
    /// Each student takes its best teacher; collisions allowed.
    Greedy
};

/// Maps each row of score to a column (-1 when unmatched). With more rows
/// than columns the best min(rows, cols) pairs are kept.
std::vector<int> optimal_assignment(const Matrix& score);
std::vector<int> greedy_assignment(const Matrix& score);

struct AlignmentReport {
    Matrix pairs;
    /// Teacher assigned to each student, -1 for excluded students.
    std::vector<int> assignment;
    std::vector<int> excluded_students;
    std::vector<int> unmatched_teachers;
    double total = 0.0;
};

AlignmentReport alignment_report(const std::vector<Matrix>& students, const TeacherSet& teachers,
                                 AssignmentRule rule = AssignmentRule::Optimal);

/// Cosine between the concatenated assigned students and their teachers.
double total_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers,
                       AssignmentRule rule = AssignmentRule::Optimal);

/// Per-neuron students: paths are matched to teachers separately for every
/// output row before concatenating. Returns the total alignment.
double row_sorted_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers);

std::string regime_label(double total_alignment, double cut = 0.8);

struct ThresholdCrossing {
    int block = 0;
    double start = 0.0;
    /// Elapsed time from block start; the block length when not reached.
    double time = 0.0;
    bool reached = false;
};

/// Needs columns t, block and the loss column, and record.blocks filled in.
std::vector<ThresholdCrossing> time_to_threshold(const RunRecord& record, double threshold = 0.1,
                                                 const std::string& loss_column = "loss_task");

struct RankSpeed {
    int rank = 0;
    double speed = 0.0;  // tau_c dc/dt
};

/// Single-path probe y = c W x in expectation mode: the teacher has rank r with
/// unit singular values, the student equals the teacher and c = 1/2.
std::vector<RankSpeed> rank_gate_speed(int dim, const std::vector<int>& ranks, std::uint64_t seed = 0);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

} // namespace nta
