#pragma once

// Declarative run description, its flat key-value text format and the
// named presets.

#include "nta/curriculum.hpp"
#include "nta/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nta {

enum class ModelKind { Gated, Deep, Reduced };

enum class CurriculumKind {
    /// Single teachers A, B, ... cycled block by block.
    Alternate,
    /// Single teachers for train_blocks, then pairwise compositions.
    Composition,
    /// Pairwise sums A+B, A+C, B+C from the start.
    Sums
};

enum class Regime { Flexible, Forgetful };

struct RunConfig {
    std::string preset = "main";
    ModelKind model = ModelKind::Gated;

    int paths = 2;
    int teachers = 2;
    int d_in = 20;
    int d_hid = 20;
    int d_out = 10;
    GateMode gate_mode = GateMode::PerPath;
    RateUnits rate_units = RateUnits::PerOutputRow;
    RegularizerConfig reg;
    /// Weights (first layer for the deep network) and gates (second layer).
    double tau_w = 1.3;
    double tau_c = 0.03;
    double sigma = 0.01;

    Regime regime = Regime::Flexible;
    /// Gate timescale of the forgetful control; 0 uses tau_w.
    double control_tau_c = 0.0;

    CurriculumKind curriculum = CurriculumKind::Alternate;
    CompositionMode composition = CompositionMode::Task;
    int n_blocks = 20;
    int train_blocks = 0;
    double tau_B = 1.0;
    double dt = 0.001;
    /// 0 selects expectation mode.
    int batch_size = 200;
    double similarity = 0.0;
    Orthogonality orthogonality = Orthogonality::PerRow;

    std::uint64_t seed = 0;
    int seeds = 10;
    int stride = 10;
    double threshold = 0.1;
    double regime_cut = 0.8;

    // Grid sweeps.
    std::string sweep_x = "tau_B";
    std::string sweep_y = "ratio";
    int grid_points = 8;
    double total_time = 20.0;
    double block_min = 0.1;
    double block_max = 10.0;
    double ratio_min = 1.0;
    double ratio_max = 100.0;
    double lambda_min = 0.0;
    double lambda_max = 2.0;
    /// Regularizer split for the lambda axis: "nta" or "fc".
    std::string lambda_rule = "nta";
    /// Largest allowed dt / min(tau); sweep cells shrink dt to respect it.
    double max_dt_fraction = 0.2;

    int workers = 0;

    /// Effective parameters after applying the regime.
    RegularizerConfig effective_reg() const;
    double effective_tau_c() const;
    void validate() const;
};

/// Every key accepted in config files and --set overrides.
std::vector<std::string> config_keys();

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Resolved configuration as ordered key-value pairs.
std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg);

/// Parses the flat text format: "key = value" lines, '#' or ';' comments and
/// optional [section] headers that are ignored. A "preset" key, if present,
/// is applied before the remaining keys.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
/// Applies the file's keys on top of an existing configuration.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "<config>");
std::string read_config_file(const std::string& path);
RunConfig load_config_file(const std::string& path);

/// Applies a "key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

std::string format_config(const RunConfig& cfg);

std::vector<std::string> preset_names();
RunConfig make_preset(const std::string& name);

} // namespace nta
