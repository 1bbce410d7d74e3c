#include "support/oracles.hpp"

#include "nta/curriculum.hpp"
#include "nta/experiments.hpp"
#include "nta/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace nta;

namespace {

TeacherSet teachers(std::uint64_t seed, int count = 2) {
    std::mt19937_64 rng = SeedStreams(seed).teachers();
    return make_teachers(count, 20, 10, 0.0, rng);
}

} // namespace

TEST_CASE("pair alignment extremes") {
    const TeacherSet t = teachers(1);
    const Matrix a = pair_alignment({t[0], -t[1]}, t);
    CHECK(a(0, 0) == doctest::Approx(1.0));
    CHECK(a(0, 1) == doctest::Approx(0.0));
    CHECK(a(1, 1) == doctest::Approx(-1.0));
    const Matrix z = pair_alignment({Matrix::Zero(10, 20), t[1]}, t);
    CHECK(z(0, 0) == 0.0);
    CHECK(z(0, 1) == 0.0);
    CHECK_THROWS_AS(pair_alignment({Matrix::Zero(3, 3)}, t), ConfigError);
}

TEST_CASE("total alignment assigns students to teachers") {
    const TeacherSet t = teachers(2);
    CHECK(total_alignment({t[0], t[1]}, t) == doctest::Approx(1.0));
    CHECK(total_alignment({t[1], t[0]}, t) == doctest::Approx(1.0));
    CHECK(total_alignment({3.0 * t[1], 3.0 * t[0]}, t) == doctest::Approx(1.0));
    const Matrix mix = (t[0] + t[1]) / 2.0;
    CHECK(total_alignment({mix, mix}, t) == doctest::Approx(std::sqrt(0.5)));
    CHECK(total_alignment({t[0], t[0]}, t) == doctest::Approx(0.5));
}

TEST_CASE("alignment is invariant to student scale and order") {
    const TeacherSet t = teachers(3, 3);
    std::mt19937_64 rng(4);
    std::vector<Matrix> s;
    for (int p = 0; p < 3; ++p) s.push_back(t[p] + oracle::gaussian(10, 20, rng, 0.3));
    const AlignmentReport base = alignment_report(s, t);
    std::vector<Matrix> scaled = {2.0 * s[0], 0.1 * s[1], 7.0 * s[2]};
    const AlignmentReport sc = alignment_report(scaled, t);
    CHECK((sc.pairs - base.pairs).norm() < 1e-12);
    CHECK(sc.assignment == base.assignment);
    const std::vector<Matrix> shuffled = {s[2], s[0], s[1]};
    CHECK(total_alignment(shuffled, t) == doctest::Approx(base.total));
}

TEST_CASE("unequal path and teacher counts") {
    const TeacherSet t = teachers(5);
    const AlignmentReport r = alignment_report({Matrix::Zero(10, 20), t[1], t[0], Matrix::Zero(10, 20)}, t);
    CHECK(r.excluded_students.size() == 2);
    CHECK(r.unmatched_teachers.empty());
    CHECK(r.total == doctest::Approx(1.0));
    const TeacherSet t3 = teachers(6, 3);
    const AlignmentReport u = alignment_report({t3[2], t3[0]}, t3);
    CHECK(u.unmatched_teachers == std::vector<int>{1});
    CHECK(u.total == doctest::Approx(1.0));
}

TEST_CASE("optimal assignment beats greedy collisions") {
    Matrix score(2, 2);
    score << 0.9, 0.8, 0.85, 0.1;
    CHECK(optimal_assignment(score) == std::vector<int>{1, 0});
    CHECK(greedy_assignment(score) == std::vector<int>{0, 0});
    CHECK_THROWS_AS(optimal_assignment(Matrix::Zero(11, 11)), ConfigError);
}

TEST_CASE("row-sorted alignment for per-neuron students") {
    const TeacherSet t = teachers(7);
    Matrix a = t[0], b = t[1];
    for (int i = 0; i < 10; i += 2) {
        a.row(i) = t[1].row(i);
        b.row(i) = t[0].row(i);
    }
    CHECK(total_alignment({a, b}, t) < 0.6);
    CHECK(row_sorted_alignment({a, b}, t) == doctest::Approx(1.0));
}

TEST_CASE("regime labels") {
    CHECK(regime_label(0.95) == "flexible");
    CHECK(regime_label(0.6) == "forgetful");
    CHECK(regime_label(0.6, 0.5) == "flexible");
}

TEST_CASE("time to threshold per block") {
    RunRecord r({"t", "block", "loss_task"});
    r.blocks = {{0, 0, 0.0, 1.0, "A"}, {1, 0, 1.0, 1.0, "B"}, {2, 0, 2.0, 1.0, "A"}};
    r.append({0.0, 0, 0.5});
    r.append({0.5, 0, 0.05});
    r.append({1.0, 1, 0.01});
    r.append({1.5, 1, 0.3});
    r.append({2.0, 2, 0.5});
    r.append({2.5, 2, 0.4});
    const auto c = time_to_threshold(r, 0.1);
    REQUIRE(c.size() == 3);
    CHECK(c[0].time == doctest::Approx(0.5));
    CHECK(c[1].time == 0.0);
    CHECK(c[1].reached);
    CHECK_FALSE(c[2].reached);
    CHECK(c[2].time == 1.0);
}

TEST_CASE("time to threshold is stride invariant") {
    RunConfig cfg = make_preset("main");
    cfg.n_blocks = 4;
    cfg.batch_size = 0;
    cfg.regime = Regime::Forgetful;
    cfg.stride = 1;
    const RunResult fine = run_curriculum(cfg);
    cfg.stride = 10;
    const RunResult coarse = run_curriculum(cfg);
    REQUIRE(fine.time_to_threshold.size() == coarse.time_to_threshold.size());
    for (std::size_t k = 0; k < fine.time_to_threshold.size(); ++k) {
        const double d = coarse.time_to_threshold[k].time - fine.time_to_threshold[k].time;
        CHECK(d >= -1e-12);
        CHECK(d <= 10 * cfg.dt + 1e-12);
    }
}

TEST_CASE("gate speed grows linearly with teacher rank") {
    std::vector<int> ranks;
    for (int r = 0; r <= 30; ++r) ranks.push_back(r);
    const auto speeds = rank_gate_speed(30, ranks, 3);
    CHECK(speeds[0].speed == 0.0);
    for (int r = 1; r <= 30; ++r) CHECK(speeds[r].speed / speeds[1].speed == doctest::Approx(r).epsilon(0.05));
    std::vector<double> x, y;
    for (const auto& s : speeds) {
        x.push_back(s.rank);
        y.push_back(s.speed);
    }
    CHECK(linear_fit(x, y).r2 > 0.99);
}

TEST_CASE("linear fit") {
    const LinearFit f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(linear_fit({1}, {1}), ConfigError);
}
