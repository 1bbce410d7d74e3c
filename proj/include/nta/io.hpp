#pragma once

// CSV and JSON persistence of records, matrices, sweeps and manifests.

#include "nta/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace nta {

extern const char* const kVersion;

/// Shortest form that round-trips (at most 17 significant digits).
std::string format_double(double x);

void write_record_csv(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_record_csv(const std::filesystem::path& path);

/// One matrix per file, row-major, no header.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_grid_csv(const SweepResult& sweep, const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// {final_total_alignment, per_block_time_to_threshold, regime_label, ...}
nlohmann::json run_summary(const RunResult& run);

nlohmann::json make_manifest(const std::string& command, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             double wall_seconds);

/// Writes run_<seed>.csv, summary_<seed>.json and, for the deep model, the
/// W2 snapshots into dir.
void write_run(const RunResult& run, const std::filesystem::path& dir);

void ensure_directory(const std::filesystem::path& dir);

/// Summaries of a results directory: per-run JSON summaries and, for
/// sweeps, per-cell mean and standard error across seeds.
nlohmann::json report_directory(const std::filesystem::path& dir);

} // namespace nta
