// Command-line entry point: runs presets, sweeps and analyses and writes
// CSV/JSON results. Exit codes: 0 ok, 2 configuration, 3 I/O, 4 numerical abort.

#include "nta/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nta;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAbort = 4;

struct CommonOptions {
    std::string preset;
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out;
    long long seed = -1;
    int seeds = 0;
    int workers = -1;
    int stride = 0;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--preset", o.preset, "Named preset (see `nta presets`)");
    app->add_option("--config", o.config_file, "Configuration file (key = value lines)");
    app->add_option("--set", o.overrides, "Override a configuration key: --set key=value")->allow_extra_args(false);
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--seed", o.seed, "First seed");
    app->add_option("--seeds", o.seeds, "Number of seeds");
    app->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    app->add_option("--stride", o.stride, "Logging stride in integrator steps");
}

RunConfig resolve(const CommonOptions& o, const std::string& default_preset) {
    RunConfig cfg = make_preset(o.preset.empty() ? default_preset : o.preset);
    if (!o.config_file.empty()) apply_config_text(cfg, read_config_file(o.config_file), o.config_file);
    for (const auto& s : o.overrides) apply_override(cfg, s);
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.seeds > 0) cfg.seeds = o.seeds;
    if (o.workers >= 0) cfg.workers = o.workers;
    if (o.stride > 0) cfg.stride = o.stride;
    cfg.validate();
    return cfg;
}

fs::path output_dir(const CommonOptions& o, const std::string& command, const RunConfig& cfg) {
    if (!o.out.empty()) return o.out;
    const char* root = std::getenv("NTA_OUTPUT_ROOT");
    return fs::path(root && *root ? root : "results") / (command + "-" + cfg.preset);
}

std::vector<std::uint64_t> seed_list(const RunConfig& cfg) {
    std::vector<std::uint64_t> s;
    for (int k = 0; k < cfg.seeds; ++k) s.push_back(cfg.seed + static_cast<std::uint64_t>(k));
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Writes runs plus manifest; returns the exit code.
int finish_runs(const std::string& command, const RunConfig& cfg, const std::vector<RunResult>& runs,
                const fs::path& dir, std::chrono::steady_clock::time_point t0, json extra = json::object()) {
    ensure_directory(dir);
    bool aborted = false;
    for (const auto& r : runs) {
        write_run(r, dir);
        if (r.record.aborted) {
            aborted = true;
            std::cerr << "seed " << r.config.seed << ": numerical abort: " << r.record.abort_message << "\n";
        }
    }
    json m = make_manifest(command, cfg, seed_list(cfg), seconds_since(t0));
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_json(m, dir / "manifest.json");
    std::vector<double> al;
    for (const auto& r : runs) al.push_back(final_alignment(r));
    double mean = 0.0;
    for (double a : al) mean += a;
    if (!al.empty()) mean /= static_cast<double>(al.size());
    std::cout << command << ": " << runs.size() << " run(s) written to " << dir.string()
              << "; mean final total alignment " << format_double(mean) << "\n";
    return aborted ? kExitAbort : 0;
}

int cmd_runs(const std::string& command, const CommonOptions& o, const std::string& default_preset,
             std::optional<ModelKind> model) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = resolve(o, default_preset);
    if (model && cfg.model != *model) throw ConfigError("`" + command + "` needs a preset of the matching model kind");
    const auto runs = run_seeds(cfg, cfg.workers);
    return finish_runs(command, cfg, runs, output_dir(o, command, cfg), t0);
}

int cmd_sweep(const CommonOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "sweep-lr-block");
    const SweepResult s = grid_sweep(cfg, cfg.workers);
    const fs::path dir = output_dir(o, "sweep", cfg);
    ensure_directory(dir);
    write_grid_csv(s, dir / "grid.csv");
    json extra = {{"axis1", s.x_name}, {"axis2", s.y_name}, {"axis1_values", s.xs}, {"axis2_values", s.ys}};
    int failed = 0;
    for (const auto& c : s.cells) failed += c.failed ? 1 : 0;
    extra["failed_cells"] = failed;
    json m = make_manifest("sweep", cfg, seed_list(cfg), seconds_since(t0));
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_json(m, dir / "manifest.json");
    std::cout << "mean total alignment (rows " << s.x_name << ", columns " << s.y_name << ")\n";
    for (std::size_t ix = 0; ix < s.xs.size(); ++ix) {
        for (std::size_t iy = 0; iy < s.ys.size(); ++iy) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%6.3f", s.mean(static_cast<int>(ix), static_cast<int>(iy)));
            std::cout << buf << (iy + 1 < s.ys.size() ? " " : "\n");
        }
    }
    if (failed) std::cerr << failed << " cell(s) failed; see grid.csv\n";
    return 0;
}

int cmd_exact(const CommonOptions& o, const std::vector<double>& tau_cs, double tau_w, double duration) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "reduced");
    const auto checks = exact_check(tau_cs, tau_w, cfg.effective_reg(), cfg.dt, duration);
    const fs::path dir = output_dir(o, "exact-check", cfg);
    ensure_directory(dir);
    RunRecord table({"tau_c", "max_deviation", "final_loss", "time_to_fit"});
    for (const auto& c : checks) {
        write_record_csv(c.run.record, dir / ("trajectory_tau_c_" + format_double(c.tau_c) + ".csv"));
        table.append({c.tau_c, c.max_deviation, c.final_loss, c.time_to_fit});
        std::cout << "tau_c=" << c.tau_c << " max|wbar - exact|=" << c.max_deviation << " final loss=" << c.final_loss
                  << "\n";
    }
    write_record_csv(table, dir / "exact.csv");
    write_json(make_manifest("exact-check", cfg, {}, seconds_since(t0)), dir / "manifest.json");
    return 0;
}

int cmd_generalize(const CommonOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "task-composition");
    if (cfg.curriculum != CurriculumKind::Composition) throw ConfigError("generalize needs a composition curriculum");
    const auto runs = run_seeds(cfg, cfg.workers);
    json gen = json::array();
    int reached = 0;
    for (const auto& r : runs) {
        const GeneralizationSummary s = summarize_generalization(r);
        json j = {{"seed", r.config.seed},
                  {"boundary_block", s.boundary_block},
                  {"first_composite_reached", s.first_composite_reached},
                  {"first_composite_time", s.first_composite_time}};
        json gates = json::object();
        for (std::size_t k = 0; k < s.composite_labels.size(); ++k) {
            gates[s.composite_labels[k]] = std::vector<double>(s.composite_gates[k].data(),
                                                               s.composite_gates[k].data() + s.composite_gates[k].size());
        }
        j["composite_gates"] = gates;
        gen.push_back(j);
        reached += s.first_composite_reached ? 1 : 0;
    }
    const fs::path dir = output_dir(o, "generalize", cfg);
    ensure_directory(dir);
    write_json(gen, dir / "generalization.json");
    std::cout << "first composite block solved in " << reached << "/" << runs.size() << " seeds\n";
    return finish_runs("generalize", cfg, runs, dir, t0);
}

int cmd_repr_cost(const CommonOptions& o, double active, double decayed) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "repr-cost");
    const auto runs = run_seeds(cfg, cfg.workers);
    json counts = json::array();
    for (const auto& r : runs) {
        const GateCount g = count_gates(r, active, decayed);
        counts.push_back({{"seed", r.config.seed},
                          {"active", g.active},
                          {"decayed", g.decayed},
                          {"peak_gates", std::vector<double>(g.peak.data(), g.peak.data() + g.peak.size())}});
        std::cout << "seed " << r.config.seed << ": " << g.active << " active, " << g.decayed << " decayed\n";
    }
    const fs::path dir = output_dir(o, "repr-cost", cfg);
    ensure_directory(dir);
    write_json({{"active_threshold", active}, {"decayed_threshold", decayed}, {"runs", counts}}, dir / "gates.json");
    return finish_runs("repr-cost", cfg, runs, dir, t0);
}

int cmd_blocklen(const CommonOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "blocklen");
    std::vector<double> tbs;
    for (double tb = cfg.block_min; tb <= cfg.block_max * (1 + 1e-9); tb *= 2) tbs.push_back(tb);
    const auto g = blocklength_growth(cfg, tbs);
    const fs::path dir = output_dir(o, "blocklen", cfg);
    ensure_directory(dir);
    RunRecord table({"tau_B", "growth", "ratio_to_previous"});
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double ratio = k ? g[k].growth / g[k - 1].growth : std::nan("");
        table.append({g[k].tau_B, g[k].growth, ratio});
        std::cout << "tau_B=" << g[k].tau_B << " growth=" << g[k].growth;
        if (k) std::cout << " ratio=" << ratio;
        std::cout << "\n";
    }
    write_record_csv(table, dir / "blocklen.csv");
    write_json(make_manifest("blocklen", cfg, seed_list(cfg), seconds_since(t0)), dir / "manifest.json");
    return 0;
}

int cmd_fewshot(const CommonOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "fewshot");
    const auto runs = run_seeds(cfg, cfg.workers);
    const fs::path dir = output_dir(o, "fewshot", cfg);
    ensure_directory(dir);
    const auto ends = block_end_loss(runs);
    RunRecord table({"block", "end_loss"});
    for (std::size_t b = 0; b < ends.size(); ++b) table.append({static_cast<double>(b), ends[b]});
    write_record_csv(table, dir / "block_end_loss.csv");
    const SeedAverage avg = average_column(runs, "loss_task");
    RunRecord curve({"t", "mean_loss", "stderr"});
    for (std::size_t i = 0; i < avg.t.size(); ++i) curve.append({avg.t[i], avg.mean[i], avg.stderr_[i]});
    write_record_csv(curve, dir / "mean_loss.csv");
    for (std::size_t b = 0; b < ends.size(); ++b) std::cout << "block " << b << " end loss " << ends[b] << "\n";
    return finish_runs("fewshot", cfg, runs, dir, t0);
}

int cmd_rank_speed(const CommonOptions& o, int dim) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "rank-speed");
    if (dim <= 0) dim = cfg.d_in;
    std::vector<int> ranks;
    for (int r = 1; r <= dim; ++r) ranks.push_back(r);
    const auto speeds = rank_gate_speed(dim, ranks, cfg.seed);
    std::vector<double> x, y;
    RunRecord table({"rank", "gate_speed"});
    for (const auto& s : speeds) {
        x.push_back(s.rank);
        y.push_back(s.speed);
        table.append({static_cast<double>(s.rank), s.speed});
    }
    const LinearFit fit = linear_fit(x, y);
    const fs::path dir = output_dir(o, "rank-speed", cfg);
    ensure_directory(dir);
    write_record_csv(table, dir / "rank_speed.csv");
    json m = make_manifest("rank-speed", cfg, {cfg.seed}, seconds_since(t0));
    m["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    write_json(m, dir / "manifest.json");
    std::cout << "slope " << fit.slope << " intercept " << fit.intercept << " R^2 " << fit.r2 << "\n";
    return 0;
}

int cmd_full_vs_reduced(const CommonOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(o, "full-vs-reduced");
    const FullVsReduced r = full_vs_reduced(cfg);
    const fs::path dir = output_dir(o, "full-vs-reduced", cfg);
    ensure_directory(dir);
    write_record_csv(r.full, dir / "full.csv");
    write_record_csv(r.reduced, dir / "reduced.csv");
    const json d = {{"loss_sup", r.loss_sup},
                    {"gate_sup", r.gate_sup},
                    {"weight_sup", r.weight_sup},
                    {"final_residual_fraction", r.final_residual_fraction}};
    write_json(d, dir / "discrepancy.json");
    write_json(make_manifest("full-vs-reduced", cfg, {cfg.seed}, seconds_since(t0)), dir / "manifest.json");
    std::cout << d.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gated linear teacher-student simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    CommonOptions o;
    std::map<std::string, CLI::App*> subs;
    auto sub = [&](const std::string& name, const std::string& help) {
        CLI::App* s = app.add_subcommand(name, help);
        if (name != "report" && name != "presets") add_common(s, o);
        subs[name] = s;
        return s;
    };
    sub("run", "Gated model on a blocked curriculum (default preset: main)");
    sub("deep", "Two-layer fully-connected network (default preset: fc)");
    sub("reduced", "Two-dimensional reduced model (default preset: reduced)");
    sub("sweep", "Grid sweep of final total alignment (default preset: sweep-lr-block)");
    std::vector<double> tau_cs = {0.1, 0.18, 0.32, 0.56, 1.0};
    double tau_w = 5.0, duration = 1.0;
    auto* exact = sub("exact-check", "Reduced-model switch against the exact symmetric solution");
    exact->add_option("--tau-c", tau_cs, "Gate timescales");
    exact->add_option("--tau-w", tau_w, "Weight timescale");
    exact->add_option("--duration", duration, "Integration time after the switch");
    sub("generalize", "Training phase followed by composite tasks (default preset: task-composition)");
    double active = 0.5, decayed = 0.1;
    auto* repr = sub("repr-cost", "Redundant paths with weight decay (default preset: repr-cost)");
    repr->add_option("--active", active, "Gate value counted as active");
    repr->add_option("--decayed", decayed, "Gate value counted as decayed");
    sub("blocklen", "Specialization growth versus block length at fixed total time");
    sub("fewshot", "Single-sample batches averaged over seeds (default preset: fewshot)");
    int dim = 0;
    auto* rank = sub("rank-speed", "Gate speed versus teacher rank");
    rank->add_option("--dim", dim, "Teacher dimension (default: preset d_in)");
    sub("full-vs-reduced", "Full model against its row-basis reduction");
    std::string report_dir;
    auto* report = sub("report", "Print JSON summaries of a results directory");
    report->add_option("dir", report_dir, "Results directory")->required();
    auto* presets = sub("presets", "List presets, or print one as a config file");
    std::string show;
    presets->add_option("name", show, "Preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (subs["run"]->parsed()) return cmd_runs("run", o, "main", ModelKind::Gated);
        if (subs["deep"]->parsed()) return cmd_runs("deep", o, "fc", ModelKind::Deep);
        if (subs["reduced"]->parsed()) return cmd_runs("reduced", o, "reduced", ModelKind::Reduced);
        if (subs["sweep"]->parsed()) return cmd_sweep(o);
        if (exact->parsed()) return cmd_exact(o, tau_cs, tau_w, duration);
        if (subs["generalize"]->parsed()) return cmd_generalize(o);
        if (repr->parsed()) return cmd_repr_cost(o, active, decayed);
        if (subs["blocklen"]->parsed()) return cmd_blocklen(o);
        if (subs["fewshot"]->parsed()) return cmd_fewshot(o);
        if (rank->parsed()) return cmd_rank_speed(o, dim);
        if (subs["full-vs-reduced"]->parsed()) return cmd_full_vs_reduced(o);
        if (report->parsed()) {
            std::cout << report_directory(report_dir).dump(2) << "\n";
            return 0;
        }
        if (presets->parsed()) {
            if (show.empty()) {
                for (const auto& n : preset_names()) std::cout << n << "\n";
            } else {
                std::cout << format_config(make_preset(show));
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << " (parameter " << e.parameter() << ")\n";
        return kExitAbort;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
