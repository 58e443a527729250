#include "mvnmf/metrics.hpp"

#include "mvnmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mvnmf {

namespace {

// Remap arbitrary integer labels to compact ids 0..k-1 in order of first use.
std::vector<int> compact_labels(const std::vector<int>& labels, int& k) {
    std::map<int, int> id;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = id.emplace(labels[i], static_cast<int>(id.size()));
        out[i] = it->second;
    }
    k = static_cast<int>(id.size());
    return out;
}

// k_true x k_pred counts of co-assigned samples.
Eigen::MatrixXd contingency(const std::vector<int>& truth, const std::vector<int>& pred,
                            int& kt, int& kp) {
    const std::vector<int> t = compact_labels(truth, kt);
    const std::vector<int> p = compact_labels(pred, kp);
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(kt, kp);
    for (std::size_t i = 0; i < t.size(); ++i) table(t[i], p[i]) += 1.0;
    return table;
}

void check_lengths(const std::vector<int>& truth, const std::vector<int>& pred, std::size_t min_n) {
    if (truth.size() != pred.size())
        throw InputError("metrics: label vectors differ in length (" +
                         std::to_string(truth.size()) + " vs " + std::to_string(pred.size()) + ")");
    if (truth.size() < min_n)
        throw InputError("metrics: need at least " + std::to_string(min_n) + " samples");
}

} // namespace

std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw InputError("hungarian_min_cost: matrix must be square");

    // Classic potentials + augmenting path formulation, 1-based with a
    // virtual row/column 0.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) assignment[p[j] - 1] = j - 1;
    return assignment;
}

double matched_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    check_lengths(truth, pred, 1);
    int kt = 0, kp = 0;
    const Eigen::MatrixXd table = contingency(truth, pred, kt, kp);

    const int k = std::max(kt, kp);
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(k, k);
    padded.topLeftCorner(kt, kp) = table;

    // maximize matches == minimize (max - count)
    const double top = padded.maxCoeff();
    const std::vector<int> assign = hungarian_min_cost((top - padded.array()).matrix());
    double matched = 0.0;
    for (int i = 0; i < k; ++i) matched += padded(i, assign[i]);
    return matched / static_cast<double>(truth.size());
}

double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
    check_lengths(truth, pred, 1);
    int kt = 0, kp = 0;
    const Eigen::MatrixXd table = contingency(truth, pred, kt, kp);
    const double n = static_cast<double>(truth.size());

    const Eigen::VectorXd a = table.rowwise().sum();
    const Eigen::VectorXd b = table.colwise().sum();

    double hu = 0.0, hv = 0.0, mi = 0.0;
    for (int i = 0; i < kt; ++i)
        if (a(i) > 0) hu -= a(i) / n * std::log(a(i) / n);
    for (int j = 0; j < kp; ++j)
        if (b(j) > 0) hv -= b(j) / n * std::log(b(j) / n);
    for (int i = 0; i < kt; ++i)
        for (int j = 0; j < kp; ++j)
            if (table(i, j) > 0)
                mi += table(i, j) / n * std::log(n * table(i, j) / (a(i) * b(j)));

    if (hu == 0.0 && hv == 0.0) return 1.0; // both single-block partitions
    if (hu == 0.0 || hv == 0.0) return 0.0;
    const double v = mi / std::sqrt(hu * hv);
    return std::clamp(v, 0.0, 1.0);
}

std::pair<double, double> rand_and_mirkin(const std::vector<int>& truth, const std::vector<int>& pred) {
    check_lengths(truth, pred, 2);
    int kt = 0, kp = 0;
    const Eigen::MatrixXd table = contingency(truth, pred, kt, kp);
    const double n = static_cast<double>(truth.size());

    const double sum_sq = table.array().square().sum();
    const double sum_a2 = table.rowwise().sum().array().square().sum();
    const double sum_b2 = table.colwise().sum().array().square().sum();

    // pairs together in one partition but apart in the other
    const double disagreements = 0.5 * (sum_a2 + sum_b2) - sum_sq;
    const double total_pairs = n * (n - 1.0) / 2.0;
    const double ri = 1.0 - disagreements / total_pairs;
    return {ri, 1.0 - ri};
}

MetricsReport evaluate_clustering(const std::vector<int>& truth, const std::vector<int>& pred) {
    MetricsReport r;
    r.accuracy = matched_accuracy(truth, pred);
    r.nmi = nmi(truth, pred);
    const auto [ri, mi] = rand_and_mirkin(truth, pred);
    r.rand_index = ri;
    r.mirkin_index = mi;
    r.n = truth.size();
    return r;
}

} // namespace mvnmf
