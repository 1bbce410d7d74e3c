// Acceptance checks: one PASS/FAIL line per criterion. An optional argument
// selects criteria whose name contains it.

#include "support/oracles.hpp"

#include "nta/curriculum.hpp"
#include "nta/experiments.hpp"
#include "nta/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace nta;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << x;
    return s.str();
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

int last_task(const RunResult& r) {
    return static_cast<int>(r.record.rows().back()[r.record.index("task")]);
}

// Pair alignment a<p>_<m> from the last logged row.
double final_pair(const RunResult& r, int p, int m) {
    return r.record.rows().back()[r.record.index("a" + std::to_string(p + 1) + "_" + std::to_string(m + 1))];
}

// ---- gradients ----

Outcome gradient_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(77);
    std::vector<RegularizerConfig> regs(1);
    RegularizerConfig r;
    r.nonneg = 0.7;
    regs.push_back(r);
    r = {};
    r.norm_l1 = 1.3;
    regs.push_back(r);
    r = {};
    r.norm_l2 = 0.9;
    regs.push_back(r);
    r = {};
    r.weight_decay = 0.77;
    regs.push_back(r);
    r.nonneg = 0.5;
    r.norm_l1 = 1.25;
    r.norm_l2 = 0.4;
    r.norm_group = NormGroup::Global;
    regs.push_back(r);

    double gated = 0.0;
    for (GateMode mode : {GateMode::PerPath, GateMode::PerNeuron}) {
        for (const auto& reg : regs) {
            for (int trial = 0; trial < 100; ++trial) {
                const int P = 2 + trial % 3, d_in = 3 + trial % 4, d_out = 2 + trial % 3;
                const GatedStudent s = oracle::random_student(P, d_in, d_out, mode, rng);
                const Matrix T = oracle::gaussian(d_out, d_in, rng);
                Batch b = expectation_batch(T);
                if (trial % 2) {
                    b.expectation = false;
                    b.X = oracle::gaussian(d_in, 5, rng);
                    b.Y = T * b.X;
                }
                const Gradients g = gradients(s, b, reg);
                for (int p = 0; p < P; ++p) {
                    const auto k = static_cast<std::size_t>(p);
                    const Matrix fd = oracle::fd_gradient(s.W[k], [&](const Matrix& w) {
                        GatedStudent t = s;
                        t.W[k] = w;
                        return oracle::total_loss(t, b, reg);
                    });
                    gated = std::max(gated, oracle::rel_error(g.W[k], fd));
                }
                const Matrix fd = oracle::fd_gradient(s.gates, [&](const Matrix& c) {
                    GatedStudent t = s;
                    t.gates = c;
                    return oracle::total_loss(t, b, reg);
                });
                gated = std::max(gated, oracle::rel_error(g.gates, fd));
            }
        }
    }

    double deep = 0.0;
    for (const auto& reg : regs) {
        for (int trial = 0; trial < 100; ++trial) {
            const int d_in = 3 + trial % 3, d_hid = 4 + trial % 2, d_out = 2 + trial % 2;
            TwoLayerNet net = make_two_layer(d_in, d_hid, d_out, 1.0, 0.04, 0.01, rng);
            net.W2 = oracle::away_from_zero(d_out, d_hid, rng);
            const Batch b = expectation_batch(oracle::gaussian(d_out, d_in, rng));
            const DeepGradients g = deep_grads(net, b, reg);
            auto total = [&](const TwoLayerNet& n) { return deep_task_loss(n, b) + deep_reg_loss(n, reg); };
            const Matrix f1 = oracle::fd_gradient(net.W1, [&](const Matrix& w) {
                TwoLayerNet t = net;
                t.W1 = w;
                return total(t);
            });
            const Matrix f2 = oracle::fd_gradient(net.W2, [&](const Matrix& w) {
                TwoLayerNet t = net;
                t.W2 = w;
                return total(t);
            });
            deep = std::max({deep, oracle::rel_error(g.W1, f1), oracle::rel_error(g.W2, f2)});
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {gated < 1e-5 && deep < 1e-5 && secs < 10.0,
            "worst relative error gated " + fmt(gated, 3) + ", two-layer " + fmt(deep, 3) + ", " + fmt(secs, 3) + " s"};
}

// ---- flexible vs forgetful ----

Outcome flexible_vs_forgetful() {
    RunConfig cfg = make_preset("main");
    const auto flex = run_seeds(cfg, 0);
    cfg.regime = Regime::Forgetful;
    const auto forg = run_seeds(cfg, 0);

    auto mean_ttt = [](const std::vector<RunResult>& runs) {
        std::vector<double> out(runs.front().time_to_threshold.size(), 0.0);
        for (const auto& r : runs)
            for (std::size_t b = 0; b < out.size(); ++b) out[b] += r.time_to_threshold[b].time / runs.size();
        return out;
    };
    const auto tf = mean_ttt(flex);
    const auto tg = mean_ttt(forg);
    std::vector<double> x, y;
    for (int b = 3; b <= 15; ++b) {
        x.push_back(b);
        y.push_back(tf[static_cast<std::size_t>(b)]);
    }
    const double slope = linear_fit(x, y).slope;
    const bool falling = slope < 0.0 && mean({y.end() - 3, y.end()}) < mean({y.begin(), y.begin() + 3});
    const double ratio = tf.back() / tg.back();

    double worst_pair = 1.0;
    for (int p = 0; p < 2; ++p) {
        std::vector<double> v;
        for (const auto& r : flex) {
            const Matrix pairs = pair_alignment(r.student.W, r.teachers);
            v.push_back(pairs.row(p).maxCoeff());
        }
        worst_pair = std::min(worst_pair, mean(v));
    }
    std::vector<double> on, off;
    for (const auto& r : forg) {
        const int m = last_task(r);
        for (int p = 0; p < 2; ++p) {
            on.push_back(final_pair(r, p, m));
            off.push_back(final_pair(r, p, 1 - m));
        }
    }
    bool tracking = true;
    for (std::size_t k = 0; k < on.size(); ++k) tracking = tracking && on[k] > off[k];

    return {falling && ratio < 0.25 && worst_pair > 0.9 && tracking,
            "flexible time to 0.1 slope over blocks 3-15 " + fmt(slope) + ", final " + fmt(tf.back()) + " vs forgetful " +
                fmt(tg.back()) + " (ratio " + fmt(ratio) + "), flexible pair alignment " + fmt(worst_pair) +
                ", forgetful students on current teacher " + (tracking ? "yes" : "no") + " (mean " + fmt(mean(on)) +
                " vs " + fmt(mean(off)) + ")"};
}

// ---- reduced model ----

Outcome reduction_equivalence() {
    const FullVsReduced r = full_vs_reduced(make_preset("full-vs-reduced"));
    return {r.loss_sup < 1e-2 && r.gate_sup < 0.05,
            "loss sup " + fmt(r.loss_sup, 3) + ", gate sup " + fmt(r.gate_sup, 3) + ", final residual fraction " +
                fmt(r.final_residual_fraction, 3)};
}

Outcome exact_solution() {
    const auto checks = exact_check({0.1, 0.18, 0.32, 0.56, 1.0}, 5.0, {}, 1e-3, 1.0);
    double worst = 0.0;
    bool fitted = true;
    std::string fits;
    for (const auto& c : checks) {
        worst = std::max(worst, c.max_deviation);
        const bool ok = c.time_to_fit >= 0.0 && c.time_to_fit <= 1.0;
        fitted = fitted && ok;
        fits += (fits.empty() ? "" : ", ") + fmt(c.tau_c, 2) + ":" +
                (c.time_to_fit >= 0.0 ? fmt(c.time_to_fit, 3) : "never (final " + fmt(c.final_loss, 3) + ")");
    }
    return {worst < 0.02 && fitted,
            "max |wbar - exact| " + fmt(worst, 3) + "; time to loss 1e-2 per tau_c within a block of 1: " + fits};
}

Outcome conservation() {
    double worst_rel = 0.0, worst_abs = 0.0;
    for (double tau_c : {0.1, 0.18, 0.32, 0.56, 1.0}) {
        ReducedState s = specialized_state(1, 5.0, tau_c);
        const double q0 = oracle::symmetric_invariant(s);
        double drift = 0.0;
        for (int k = 0; k < 1000; ++k) {
            oracle::symmetric_flow_step(s, 1e-3);
            drift = std::max(drift, std::abs(oracle::symmetric_invariant(s) - q0));
        }
        worst_abs = std::max(worst_abs, drift);
        worst_rel = std::max(worst_rel, drift / std::abs(q0));
    }
    return {worst_rel < 1e-3, "drift over one block relative to the invariant " + fmt(worst_rel, 3) + " (absolute " +
                                  fmt(worst_abs, 3) + ")"};
}

Outcome ntk() {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix r = oracle::gaussian(2, 3, rng, 0.5);
        const ReducedState s = make_reduced_2d(r.col(0), r.col(1), r.col(2), trial % 2, 0.7, 0.2);
        const double dt = 1e-6;
        const double slope = -(reduced_loss(reduced_step(s, dt, {})) - reduced_loss(s)) / dt;
        worst = std::max(worst, std::abs(slope - ntk_descent_rate(s)) / ntk_descent_rate(s));
    }
    ReducedState spec = make_reduced_2d({1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, 0, 1.0, 1.0);
    spec.target.col(0) = spec.output().col(0) + Eigen::Vector2d(-1.0, 1.0);
    ReducedState mixed = make_reduced_2d({0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, 0, 1.0, 1.0);
    mixed.target.col(0) = mixed.output().col(0) + Eigen::Vector2d(-1.0, 1.0);
    const double a = ntk_descent_rate(spec), b = ntk_descent_rate(mixed);
    return {worst < 1e-3 && a > b && std::abs(a - 4.0) < 1e-12 && std::abs(b - 1.0) < 1e-12,
            "worst relative error " + fmt(worst, 3) + "; specialized " + fmt(a) + " vs unspecialized " + fmt(b)};
}

Outcome block_length() {
    RunConfig cfg = make_preset("blocklen");
    const auto g = blocklength_growth(cfg, {0.0125, 0.025, 0.05});
    bool ok = true;
    std::string s;
    for (std::size_t k = 1; k < g.size(); ++k) {
        const double ratio = g[k].growth / g[k - 1].growth;
        ok = ok && ratio >= 1.5 && ratio <= 2.5;
        s += (s.empty() ? "" : ", ") + fmt(g[k].tau_B) + "/" + fmt(g[k - 1].tau_B) + " ratio " + fmt(ratio);
    }
    return {ok, s + " (growth at " + fmt(g.front().tau_B) + ": " + fmt(g.front().growth, 3) + ", tau_c " +
                    fmt(cfg.tau_c) + ")"};
}

// ---- sweeps ----

Outcome phase_diagram() {
    RunConfig lr = make_preset("sweep-lr-block");
    const SweepResult a = grid_sweep(lr, 0);
    RunConfig rg = make_preset("sweep-reg-block");
    const SweepResult b = grid_sweep(rg, 0);
    const int n = lr.grid_points - 1;

    const double corner_lr = a.mean(n, n);
    const double corner_reg = b.mean(n, n);
    double short_edge = 0.0, lambda_edge = 0.0;
    for (int i = 0; i <= n; ++i) {
        short_edge = std::max({short_edge, a.mean(0, i), b.mean(0, i)});
        lambda_edge = std::max(lambda_edge, b.mean(i, 0));
    }
    int failed = 0;
    for (const auto& c : a.cells) failed += c.failed;
    for (const auto& c : b.cells) failed += c.failed;
    return {corner_lr > 0.8 && corner_reg > 0.8 && short_edge < 0.4 && lambda_edge < 0.4,
            "long-block corner " + fmt(corner_lr, 3) + " (ratio axis) / " + fmt(corner_reg, 3) +
                " (lambda axis); max on short-block edge " + fmt(short_edge, 3) + ", max on lambda=0 edge " +
                fmt(lambda_edge, 3) + "; failed cells " + std::to_string(failed)};
}

Outcome rank_speed() {
    std::vector<int> ranks(30);
    std::iota(ranks.begin(), ranks.end(), 1);
    std::vector<double> x, y;
    for (const auto& s : rank_gate_speed(30, ranks, 0)) {
        x.push_back(s.rank);
        y.push_back(s.speed);
    }
    const LinearFit f = linear_fit(x, y);
    return {f.r2 > 0.99, "R^2 " + fmt(f.r2, 6) + ", slope " + fmt(f.slope) + ", intercept " + fmt(f.intercept, 3)};
}

Outcome representational_cost() {
    const auto costly = run_seeds(make_preset("repr-cost"), 0);
    const auto free = run_seeds(make_preset("repr-cost-free"), 0);
    int exact = 0, more = 0;
    std::string counts;
    for (const auto& r : costly) {
        const GateCount g = count_gates(r);
        exact += g.active == 2 && g.decayed == 2;
    }
    for (const auto& r : free) {
        const GateCount g = count_gates(r);
        more += g.active > 2;
        counts += (counts.empty() ? "" : ",") + std::to_string(g.active);
    }
    const int n = static_cast<int>(costly.size());
    return {10 * exact >= 9 * n && 10 * more >= 9 * static_cast<int>(free.size()),
            "weight decay: 2 active and 2 decayed in " + std::to_string(exact) + "/" + std::to_string(n) +
                " seeds; no weight decay: more than 2 active in " + std::to_string(more) + "/" +
                std::to_string(free.size()) + " seeds (active counts " + counts + ")"};
}

Outcome composition() {
    RunConfig cfg = make_preset("task-composition");
    const auto flex = run_seeds(cfg, 0);
    cfg.regime = Regime::Forgetful;
    const auto forg = run_seeds(cfg, 0);
    auto reached = [](const std::vector<RunResult>& runs) {
        int k = 0;
        for (const auto& r : runs) k += summarize_generalization(r).first_composite_reached;
        return k;
    };
    const int rf = reached(flex), rg = reached(forg);
    std::vector<double> off;
    for (const auto& r : flex) {
        const GeneralizationSummary s = summarize_generalization(r);
        if (s.composite_gates.empty()) continue;
        const std::vector<int> a = optimal_assignment(pair_alignment(r.student.W, r.teachers));
        for (std::size_t p = 0; p < a.size(); ++p)
            if (a[p] == 2) off.push_back(std::abs(s.composite_gates[0][static_cast<Eigen::Index>(p)]));
    }
    const double c_gate = mean(off);
    const int n = static_cast<int>(flex.size());
    return {10 * rf >= 8 * n && 2 * rg < n && c_gate < 0.1,
            "first composite block solved in " + std::to_string(rf) + "/" + std::to_string(n) +
                " flexible and " + std::to_string(rg) + "/" + std::to_string(forg.size()) +
                " forgetful seeds; A+B gate on the C student " + fmt(c_gate, 3)};
}

Outcome fully_connected() {
    struct Score {
        double alignment = 0.0;
        double ratio = 0.0;
    };
    auto score = [](const RunConfig& cfg) {
        const auto runs = run_seeds(cfg, 0);
        std::vector<double> al, ratios;
        for (const auto& r : runs) {
            al.push_back(final_alignment(r));
            const int d = r.config.d_out;
            const std::size_t n = r.w2_sorted_snapshots.size();
            for (std::size_t b = n >= 2 ? n - 2 : 0; b < n; ++b) {
                const Matrix& w = r.w2_sorted_snapshots[b];
                const int task = r.record.blocks[b].task == "A" ? 0 : 1;
                const double on = std::abs(w.middleCols(task * d, d).mean());
                const double off = std::abs(w.middleCols((1 - task) * d, d).mean());
                ratios.push_back(on / std::max(off, 1e-12));
            }
        }
        return Score{mean(al), mean(ratios)};
    };
    RunConfig cfg = make_preset("fc");
    cfg.seeds = 3;
    const Score reg = score(cfg);
    cfg.reg = RegularizerConfig{};
    const Score plain = score(cfg);
    const bool ok = reg.alignment > 0.8 && reg.ratio > 2.0 && plain.alignment <= 0.8 && plain.ratio <= 2.0;
    return {ok, "regularized: sorted alignment " + fmt(reg.alignment, 3) + ", matched/off block mean " +
                    fmt(reg.ratio, 3) + "; unregularized: " + fmt(plain.alignment, 3) + ", " + fmt(plain.ratio, 3)};
}

Outcome few_shot() {
    const auto runs = run_seeds(make_preset("fewshot"), 0);
    const auto ends = block_end_loss(runs);
    double worst = 0.0;
    for (std::size_t b = 2; b < ends.size(); ++b) worst = std::max(worst, ends[b] / ends[0]);
    std::string s;
    for (double e : ends) s += (s.empty() ? "" : ", ") + fmt(e, 3);
    return {worst < 0.5, std::to_string(runs.size()) + " seeds; block-end loss " + s +
                             "; worst later/first ratio " + fmt(worst, 3)};
}

Outcome non_orthogonality() {
    std::vector<double> al;
    std::string s;
    for (double sim : {0.0, 0.3, 0.6, 0.9}) {
        RunConfig cfg = make_preset("main");
        cfg.similarity = sim;
        cfg.batch_size = 0;
        cfg.seeds = 3;
        std::vector<double> v;
        for (const auto& r : run_seeds(cfg, 0)) v.push_back(final_alignment(r));
        al.push_back(mean(v));
        s += (s.empty() ? "" : ", ") + fmt(sim, 2) + ":" + fmt(al.back(), 3);
    }
    bool graceful = al.back() < al.front();
    for (std::size_t k = 1; k < al.size(); ++k) graceful = graceful && al[k] <= al[k - 1] + 0.02;

    RunConfig cfg = make_preset("nonortho-tasks");
    cfg.seeds = 3;
    std::vector<double> worst;
    for (const auto& r : run_seeds(cfg, 0)) {
        const Matrix pairs = pair_alignment(r.student.W, r.teachers);
        const std::vector<int> a = optimal_assignment(pairs);
        double w = 1.0;
        for (std::size_t p = 0; p < a.size(); ++p) w = std::min(w, pairs(static_cast<Eigen::Index>(p), a[p]));
        worst.push_back(w);
    }
    const double rec = mean(worst);
    return {graceful && rec > 0.8,
            "final alignment by teacher cosine " + s + "; composite tasks: weakest recovered pair alignment " +
                fmt(rec, 3)};
}

} // namespace

int main(int argc, char** argv) {
    const std::string filter = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient-oracle", gradient_oracle},
        {"flexible-vs-forgetful", flexible_vs_forgetful},
        {"reduction-equivalence", reduction_equivalence},
        {"exact-solution", exact_solution},
        {"conservation-law", conservation},
        {"ntk-equivalence", ntk},
        {"phase-diagram", phase_diagram},
        {"block-length-scaling", block_length},
        {"rank-speed", rank_speed},
        {"representational-cost", representational_cost},
        {"compositional-generalization", composition},
        {"fc-emergent-gating", fully_connected},
        {"few-shot", few_shot},
        {"non-orthogonality", non_orthogonality},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        if (!filter.empty() && name.find(filter) == std::string::npos) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed ? 1 : 0;
}
