#include "nta/curriculum.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace nta;

namespace {

TeacherSet teachers_for(std::uint64_t seed, int count, double similarity, int d_in = 20, int d_out = 10) {
    std::mt19937_64 rng = SeedStreams(seed).teachers();
    return make_teachers(count, d_in, d_out, similarity, rng);
}

} // namespace

TEST_CASE("orthogonal teachers have orthogonal unit corresponding rows") {
    const TeacherSet t = teachers_for(1, 3, 0.0);
    REQUIRE(t.count() == 3);
    for (int i = 0; i < t.d_out; ++i) {
        for (int m = 0; m < 3; ++m) {
            CHECK(t[m].row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
            for (int n = m + 1; n < 3; ++n) CHECK(std::abs(t[m].row(i).dot(t[n].row(i))) < 1e-12);
        }
    }
}

TEST_CASE("similarity sets the corresponding-row cosine") {
    for (double s : {0.3, 0.5, 0.9}) {
        const TeacherSet t = teachers_for(2, 2, s);
        for (int i = 0; i < t.d_out; ++i) {
            const double cos = t[0].row(i).dot(t[1].row(i)) / (t[0].row(i).norm() * t[1].row(i).norm());
            CHECK(std::abs(cos - s) < 1e-10);
        }
    }
}

TEST_CASE("full orthogonality makes every pair of rows orthogonal") {
    std::mt19937_64 rng = SeedStreams(3).teachers();
    const TeacherSet t = make_teachers(2, 20, 10, 0.0, rng, Orthogonality::Full);
    Matrix stacked(20, 20);
    stacked << t[0], t[1];
    CHECK((stacked * stacked.transpose() - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("teacher construction is validated") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(make_teachers(3, 2, 4, 0.0, rng), ConfigError);
    CHECK_THROWS_AS(make_teachers(2, 20, 10, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(make_teachers(2, 20, 10, -0.1, rng), ConfigError);
}

TEST_CASE("seed streams are independent and reproducible") {
    const TeacherSet a = teachers_for(7, 2, 0.0);
    const TeacherSet b = teachers_for(7, 2, 0.0);
    CHECK((a[0] - b[0]).norm() == 0.0);
    const TeacherSet c = teachers_for(8, 2, 0.0);
    CHECK((a[0] - c[0]).norm() > 0.1);
    std::mt19937_64 x = SeedStreams(7).init();
    std::mt19937_64 y = SeedStreams(7).batches();
    CHECK(x() != y());
}

TEST_CASE("composite tasks") {
    const TeacherSet t = teachers_for(4, 3, 0.0, 20, 6);
    const auto sums = make_composite_tasks(t, CompositionMode::Task);
    REQUIRE(sums.size() == 3);
    CHECK(sums[0].label == "A+B");
    CHECK(sums[1].label == "A+C");
    CHECK(sums[2].label == "B+C");
    CHECK((sums[0].teacher - (t[0] + t[1])).norm() == 0.0);

    const auto rows = make_composite_tasks(t, CompositionMode::Subtask);
    REQUIRE(rows.size() == 3);
    CHECK((rows[0].teacher.row(0) - t[0].row(0)).norm() == 0.0);
    CHECK((rows[0].teacher.row(1) - t[1].row(1)).norm() == 0.0);
    CHECK((rows[2].teacher.row(4) - t[1].row(4)).norm() == 0.0);
    CHECK((rows[2].teacher.row(5) - t[2].row(5)).norm() == 0.0);

    CHECK_THROWS_AS(interleave_task(t, {0, 1}), ConfigError);
    CHECK_THROWS_AS(single_task(t, 3), ConfigError);
}

TEST_CASE("composite tasks are pairwise similar while the latent teachers are orthogonal") {
    const TeacherSet t = teachers_for(5, 3, 0.0, 20, 6);
    const auto sums = make_composite_tasks(t, CompositionMode::Task);
    const double cos = (sums[0].teacher.cwiseProduct(sums[1].teacher)).sum() /
                       (sums[0].teacher.norm() * sums[1].teacher.norm());
    CHECK(cos == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("active task lookup and cycling") {
    const TeacherSet t = teachers_for(6, 2, 0.0);
    const BlockSchedule s = alternating_schedule({single_task(t, 0), single_task(t, 1)}, 1.0, 6);
    ActiveTask a = active_task(s, 0.0);
    CHECK(a.block == 0);
    CHECK(a.task_index == 0);
    a = active_task(s, 1.5);
    CHECK(a.block == 1);
    CHECK(a.task_index == 1);
    CHECK(a.time_in_block == doctest::Approx(0.5));
    a = active_task(s, 2.0);
    CHECK(a.block == 2);
    CHECK(a.task_index == 0);
    for (double x : {0.0, 0.3, 1.7, 2.2}) CHECK(active_task(s, x).task_index == active_task(s, x + 2.0).task_index);
    CHECK_THROWS_AS(active_task(s, 6.0), std::out_of_range);
    CHECK_THROWS_AS(active_task(s, -0.1), std::out_of_range);
}

TEST_CASE("step lookup is exact at block boundaries") {
    const TeacherSet t = teachers_for(6, 2, 0.0);
    const BlockSchedule s = alternating_schedule({single_task(t, 0), single_task(t, 1)}, 0.1, 5);
    CHECK(active_task_at_step(s, 99, 0.001).block == 0);
    CHECK(active_task_at_step(s, 100, 0.001).block == 1);
    CHECK(active_task_at_step(s, 300, 0.001).block == 3);
    CHECK(active_task_at_step(s, 300, 0.001).task_index == 1);
    CHECK_THROWS_AS(active_task_at_step(s, 500, 0.001), std::out_of_range);
}

TEST_CASE("batches") {
    const TeacherSet t = teachers_for(9, 2, 0.0);
    const TaskSpec task = single_task(t, 1);
    std::mt19937_64 rng(10);
    Batch b = sample_batch(task, 200, rng);
    CHECK(b.X.cols() == 200);
    CHECK((b.Y - t[1] * b.X).norm() == 0.0);
    CHECK(sample_batch(task, 1, rng).X.cols() == 1);
    b = sample_batch(task, 0, rng);
    CHECK(b.expectation);
    CHECK(b.size() == 0);
    CHECK_THROWS_AS(sample_batch(task, -1, rng), ConfigError);
}

TEST_CASE("large batches have identity input covariance") {
    const TeacherSet t = teachers_for(11, 2, 0.0);
    std::mt19937_64 rng(12);
    const Batch b = sample_batch(single_task(t, 0), 100000, rng);
    const Matrix cov = b.X * b.X.transpose() / 100000.0;
    CHECK((cov - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("consecutive draws advance the stream deterministically") {
    const TeacherSet t = teachers_for(13, 2, 0.0);
    const TaskSpec task = single_task(t, 0);
    std::mt19937_64 r1(5), r2(5);
    const Batch a1 = sample_batch(task, 3, r1);
    const Batch a2 = sample_batch(task, 3, r1);
    const Batch b1 = sample_batch(task, 3, r2);
    CHECK((a1.X - b1.X).norm() == 0.0);
    CHECK((a1.X - a2.X).norm() > 0.0);
}
