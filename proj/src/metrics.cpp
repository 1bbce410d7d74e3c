#include "nta/metrics.hpp"

#include "nta/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nta {

namespace {

double row_cosine(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b) {
    const double n = a.norm() * b.norm();
    return n > 0.0 ? a.dot(b) / n : 0.0;
}

void search(const Matrix& score, int row, std::vector<int>& current, std::vector<bool>& used, double sum,
            double& best, std::vector<int>& best_map) {
    if (row == score.rows()) {
        if (sum > best) {
            best = sum;
            best_map = current;
        }
        return;
    }
    for (int c = 0; c < score.cols(); ++c) {
        if (used[static_cast<std::size_t>(c)]) continue;
        used[static_cast<std::size_t>(c)] = true;
        current[static_cast<std::size_t>(row)] = c;
        search(score, row + 1, current, used, sum + score(row, c), best, best_map);
        used[static_cast<std::size_t>(c)] = false;
    }
}

double flat_cosine(const std::vector<const Matrix*>& a, const std::vector<const Matrix*>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k]->cwiseProduct(*b[k]).sum();
        na += a[k]->squaredNorm();
        nb += b[k]->squaredNorm();
    }
    const double n = std::sqrt(na * nb);
    return n > 0.0 ? dot / n : 0.0;
}

} // namespace

Matrix pair_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers) {
    const int P = static_cast<int>(students.size());
    const int M = teachers.count();
    Matrix out = Matrix::Zero(P, M);
    for (int p = 0; p < P; ++p) {
        const Matrix& S = students[static_cast<std::size_t>(p)];
        if (S.rows() != teachers.d_out || S.cols() != teachers.d_in) throw ConfigError("student shape mismatch");
        for (int m = 0; m < M; ++m) {
            double sum = 0.0;
            for (int i = 0; i < teachers.d_out; ++i) sum += row_cosine(S.row(i), teachers[m].row(i));
            out(p, m) = sum / teachers.d_out;
        }
    }
    return out;
}

std::vector<int> optimal_assignment(const Matrix& score) {
    if (score.rows() > score.cols()) {
        const std::vector<int> t = optimal_assignment(score.transpose());
        std::vector<int> out(static_cast<std::size_t>(score.rows()), -1);
        for (std::size_t c = 0; c < t.size(); ++c) out[static_cast<std::size_t>(t[c])] = static_cast<int>(c);
        return out;
    }
    if (score.cols() > 10) throw ConfigError("exhaustive assignment limited to 10 columns");
    std::vector<int> current(static_cast<std::size_t>(score.rows()), -1);
    std::vector<int> best_map = current;
    std::vector<bool> used(static_cast<std::size_t>(score.cols()), false);
    double best = -std::numeric_limits<double>::infinity();
    search(score, 0, current, used, 0.0, best, best_map);
    return best_map;
}

std::vector<int> greedy_assignment(const Matrix& score) {
    std::vector<int> out(static_cast<std::size_t>(score.rows()), -1);
    for (int r = 0; r < score.rows(); ++r) {
        if (score.cols() == 0) break;
        Eigen::Index c;
        score.row(r).maxCoeff(&c);
        out[static_cast<std::size_t>(r)] = static_cast<int>(c);
    }
    return out;
}

AlignmentReport alignment_report(const std::vector<Matrix>& students, const TeacherSet& teachers,
                                 AssignmentRule rule) {
    AlignmentReport r;
    r.pairs = pair_alignment(students, teachers);
    r.assignment = rule == AssignmentRule::Optimal ? optimal_assignment(r.pairs) : greedy_assignment(r.pairs);
    std::vector<bool> matched(static_cast<std::size_t>(teachers.count()), false);
    std::vector<const Matrix*> s, t;
    for (std::size_t p = 0; p < students.size(); ++p) {
        const int m = r.assignment[p];
        if (m < 0) {
            r.excluded_students.push_back(static_cast<int>(p));
            continue;
        }
        matched[static_cast<std::size_t>(m)] = true;
        s.push_back(&students[p]);
        t.push_back(&teachers[m]);
    }
    for (int m = 0; m < teachers.count(); ++m)
        if (!matched[static_cast<std::size_t>(m)]) r.unmatched_teachers.push_back(m);
    r.total = flat_cosine(s, t);
    return r;
}

double total_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers, AssignmentRule rule) {
    return alignment_report(students, teachers, rule).total;
}

double row_sorted_alignment(const std::vector<Matrix>& students, const TeacherSet& teachers) {
    const int P = static_cast<int>(students.size());
    const int M = teachers.count();
    double dot = 0.0, ns = 0.0, nt = 0.0;
    for (int i = 0; i < teachers.d_out; ++i) {
        Matrix score(P, M);
        for (int p = 0; p < P; ++p)
            for (int m = 0; m < M; ++m)
                score(p, m) = row_cosine(students[static_cast<std::size_t>(p)].row(i), teachers[m].row(i));
        const std::vector<int> a = optimal_assignment(score);
        for (int p = 0; p < P; ++p) {
            const int m = a[static_cast<std::size_t>(p)];
            if (m < 0) continue;
            const auto s = students[static_cast<std::size_t>(p)].row(i);
            const auto t = teachers[m].row(i);
            dot += s.dot(t);
            ns += s.squaredNorm();
            nt += t.squaredNorm();
        }
    }
    const double n = std::sqrt(ns * nt);
    return n > 0.0 ? dot / n : 0.0;
}

std::string regime_label(double total_alignment, double cut) { return total_alignment > cut ? "flexible" : "forgetful"; }

std::vector<ThresholdCrossing> time_to_threshold(const RunRecord& record, double threshold,
                                                 const std::string& loss_column) {
    const std::size_t it = record.index("t");
    const std::size_t ib = record.index("block");
    const std::size_t il = record.index(loss_column);
    std::vector<ThresholdCrossing> out;
    out.reserve(record.blocks.size());
    for (const auto& b : record.blocks) {
        ThresholdCrossing c;
        c.block = b.index;
        c.start = b.start;
        c.time = b.length;
        out.push_back(c);
    }
    for (const auto& row : record.rows()) {
        const auto k = static_cast<std::size_t>(row[ib]);
        if (k >= out.size() || out[k].reached) continue;
        if (row[il] < threshold) {
            out[k].reached = true;
            out[k].time = std::max(0.0, row[it] - out[k].start);
        }
    }
    return out;
}

std::vector<RankSpeed> rank_gate_speed(int dim, const std::vector<int>& ranks, std::uint64_t seed) {
    if (dim < 1) throw ConfigError("rank probe needs a positive dimension");
    std::mt19937_64 rng = SeedStreams(seed).teachers();
    std::normal_distribution<double> normal;
    Matrix A(dim, dim), B(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) A(i, j) = normal(rng);
    for (Eigen::Index j = 0; j < dim; ++j)
        for (Eigen::Index i = 0; i < dim; ++i) B(i, j) = normal(rng);
    const Matrix U = Eigen::HouseholderQR<Matrix>(A).householderQ();
    const Matrix V = Eigen::HouseholderQR<Matrix>(B).householderQ();

    std::vector<RankSpeed> out;
    for (int r : ranks) {
        if (r < 0 || r > dim) throw ConfigError("rank out of range");
        const Matrix teacher = U.leftCols(r) * V.leftCols(r).transpose();
        GatedStudent s;
        s.W = {teacher};
        s.gates = Matrix::Constant(1, 1, 0.5);
        const Matrix g = grad_gates(s, expectation_batch(teacher), RegularizerConfig{});
        out.push_back({r, -g(0, 0)});
    }
    return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("linear fit needs two or more paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r2 = (sxx > 0.0 && syy > 0.0) ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

} // namespace nta
