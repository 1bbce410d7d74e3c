#include "nta/config.hpp"

#include <functional>

namespace nta {

namespace {

RunConfig main_preset() {
    RunConfig c;
    c.preset = "main";
    c.paths = c.teachers = 2;
    c.d_in = 20;
    c.d_out = 10;
    c.reg.nonneg = 0.091;
    c.reg.norm_l1 = 0.456;
    c.tau_w = 1.3;
    c.tau_c = 0.03;
    c.control_tau_c = 1.3;
    c.batch_size = 200;
    c.seeds = 10;
    c.n_blocks = 20;
    c.tau_B = 1.0;
    c.dt = 0.001;
    return c;
}

RunConfig composition_preset(CompositionMode mode) {
    RunConfig c = main_preset();
    c.paths = c.teachers = 3;
    c.d_in = 20;
    c.d_out = 6;
    c.curriculum = CurriculumKind::Composition;
    c.composition = mode;
    c.n_blocks = 30;
    c.train_blocks = 24;
    c.control_tau_c = 0.0;
    c.tau_w = 0.2;
    if (mode == CompositionMode::Task) {
        c.preset = "task-composition";
        c.reg.nonneg = 0.5;
        c.reg.norm_l1 = 1.25;
        c.tau_c = 0.03;
        c.dt = 0.001;
    } else {
        c.preset = "subtask-composition";
        c.gate_mode = GateMode::PerNeuron;
        c.reg.nonneg = 0.023;
        c.reg.norm_l1 = 0.0;
        c.reg.norm_l2 = 0.011;
        c.tau_c = 0.005;
        c.dt = 0.01;
    }
    return c;
}

RunConfig reduced_preset() {
    RunConfig c = main_preset();
    c.preset = "reduced";
    c.model = ModelKind::Reduced;
    c.d_in = 1;
    c.d_out = 2;
    c.reg.nonneg = 0.091;
    c.reg.norm_l1 = 0.455;
    c.tau_w = 5.0;
    c.tau_c = 0.7;
    c.control_tau_c = 0.0;
    c.seeds = 1;
    c.n_blocks = 17;
    return c;
}

RunConfig fc_preset() {
    RunConfig c = main_preset();
    c.preset = "fc";
    c.model = ModelKind::Deep;
    c.d_in = 20;
    c.d_hid = 20;
    c.d_out = 10;
    c.reg.nonneg = 0.2;
    c.reg.norm_l1 = 0.0;
    c.reg.norm_l2 = 0.1;
    c.tau_w = 0.06;
    c.tau_c = 0.01;
    c.control_tau_c = 0.0;
    c.n_blocks = 30;
    c.dt = 0.01;
    return c;
}

RunConfig nta_sweep(const std::string& name, const std::string& y) {
    RunConfig c = main_preset();
    c.preset = name;
    c.reg.nonneg = 0.5;
    c.reg.norm_l1 = 1.25;
    c.tau_w = 0.1;
    c.tau_c = 0.005;
    c.control_tau_c = 0.0;
    c.n_blocks = 7;
    c.dt = 0.001;
    c.batch_size = 0;
    c.seeds = 3;
    c.sweep_x = "tau_B";
    c.sweep_y = y;
    c.lambda_rule = "nta";
    c.stride = 1000;
    return c;
}

RunConfig fc_sweep(const std::string& name, const std::string& y) {
    RunConfig c = fc_preset();
    c.preset = name;
    c.reg.nonneg = 0.23;
    c.reg.norm_l2 = 0.11;
    c.tau_w = 0.04;
    c.tau_c = 0.01;
    c.n_blocks = 20;
    c.batch_size = 0;
    c.seeds = 3;
    c.sweep_x = "tau_B";
    c.sweep_y = y;
    c.lambda_rule = "fc";
    c.stride = 100;
    return c;
}

RunConfig task_switching_preset() {
    RunConfig c = main_preset();
    c.preset = "task-switching";
    c.reg.nonneg = 0.18;
    c.reg.norm_l1 = 0.36;
    c.tau_w = 0.07;
    c.tau_c = 0.01;
    c.control_tau_c = 0.0;
    c.n_blocks = 30;
    c.dt = 0.01;
    return c;
}

RunConfig nonortho_tasks_preset() {
    RunConfig c = main_preset();
    c.preset = "nonortho-tasks";
    c.paths = c.teachers = 3;
    c.d_out = 6;
    c.curriculum = CurriculumKind::Sums;
    c.reg.nonneg = 0.33;
    c.reg.norm_l1 = 0.83;
    c.tau_w = 0.05;
    c.tau_c = 0.03;
    c.control_tau_c = 0.0;
    c.n_blocks = 50;
    c.dt = 0.001;
    return c;
}

RunConfig nonortho_teachers_preset() {
    RunConfig c = main_preset();
    c.preset = "nonortho-teachers";
    c.reg.nonneg = 0.0;
    c.reg.norm_l1 = 0.0;
    c.reg.norm_l2 = 0.5;
    c.tau_w = 0.016;
    c.tau_c = 0.016;
    c.control_tau_c = 0.0;
    c.seeds = 1;
    c.n_blocks = 10;
    c.dt = 0.01;
    return c;
}

RunConfig full_vs_reduced_preset() {
    RunConfig c = main_preset();
    c.preset = "full-vs-reduced";
    c.reg.nonneg = 0.091;
    c.reg.norm_l1 = 0.455;
    c.control_tau_c = 0.0;
    c.seeds = 1;
    return c;
}

RunConfig slow_high_d_preset() {
    RunConfig c = main_preset();
    c.preset = "slow-high-d";
    c.d_in = 30;
    c.d_out = 30;
    c.reg.nonneg = 0.091;
    c.reg.norm_l1 = 0.455;
    c.tau_w = 0.5;
    c.tau_c = 0.1;
    c.control_tau_c = 0.0;
    return c;
}

RunConfig repr_cost_preset(bool costly) {
    RunConfig c = main_preset();
    c.preset = costly ? "repr-cost" : "repr-cost-free";
    c.paths = 4;
    c.teachers = 2;
    c.reg.nonneg = costly ? 0.194 : 0.545;
    c.reg.norm_l1 = costly ? 0.968 : 2.727;
    c.reg.weight_decay = costly ? 0.77 : 0.0;
    c.tau_w = 1.3;
    c.tau_c = 0.03;
    c.control_tau_c = 0.0;
    c.n_blocks = 20;
    return c;
}

RunConfig fewshot_preset() {
    RunConfig c = main_preset();
    c.preset = "fewshot";
    c.reg.nonneg = 0.091;
    c.reg.norm_l1 = 0.0;
    c.reg.norm_l2 = 0.455;
    c.tau_w = 1.0;
    c.tau_c = 0.01;
    c.control_tau_c = 0.0;
    c.batch_size = 1;
    c.seeds = 100;
    c.n_blocks = 6;
    c.dt = 0.02;
    c.rate_units = RateUnits::Loss;
    c.stride = 1;
    return c;
}

RunConfig blocklen_preset() {
    RunConfig c = reduced_preset();
    c.preset = "blocklen";
    c.reg = RegularizerConfig{};
    c.tau_w = 1.0;
    c.tau_c = 1.0;
    c.tau_B = 0.025;
    c.dt = 0.0001;
    c.total_time = 0.4;
    c.block_min = 0.0125;
    c.block_max = 0.05;
    c.sigma = 0.1;
    c.seeds = 10;
    c.stride = 1;
    return c;
}

RunConfig rank_speed_preset() {
    RunConfig c = slow_high_d_preset();
    c.preset = "rank-speed";
    c.batch_size = 0;
    c.seeds = 1;
    return c;
}

const std::vector<std::pair<std::string, std::function<RunConfig()>>>& registry() {
    static const std::vector<std::pair<std::string, std::function<RunConfig()>>> r = {
        {"main", main_preset},
        {"task-composition", [] { return composition_preset(CompositionMode::Task); }},
        {"subtask-composition", [] { return composition_preset(CompositionMode::Subtask); }},
        {"reduced", reduced_preset},
        {"fc", fc_preset},
        {"sweep-lr-block", [] { return nta_sweep("sweep-lr-block", "ratio"); }},
        {"sweep-reg-block", [] { return nta_sweep("sweep-reg-block", "lambda"); }},
        {"fc-sweep-lr-block", [] { return fc_sweep("fc-sweep-lr-block", "ratio"); }},
        {"fc-sweep-reg-block", [] { return fc_sweep("fc-sweep-reg-block", "lambda"); }},
        {"task-switching", task_switching_preset},
        {"nonortho-tasks", nonortho_tasks_preset},
        {"nonortho-teachers", nonortho_teachers_preset},
        {"full-vs-reduced", full_vs_reduced_preset},
        {"slow-high-d", slow_high_d_preset},
        {"repr-cost", [] { return repr_cost_preset(true); }},
        {"repr-cost-free", [] { return repr_cost_preset(false); }},
        {"fewshot", fewshot_preset},
        {"blocklen", blocklen_preset},
        {"rank-speed", rank_speed_preset},
    };
    return r;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
}

RunConfig make_preset(const std::string& name) {
    for (const auto& [n, fn] : registry())
        if (n == name) return fn();
    std::string known;
    for (const auto& [n, fn] : registry()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

} // namespace nta
