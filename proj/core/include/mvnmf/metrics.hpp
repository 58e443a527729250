#pragma once

#include <Eigen/Core>
#include <vector>

namespace mvnmf {

// External clustering validation for one run. mirkin_index = 1 - rand_index.
struct MetricsReport {
    double accuracy = 0.0;
    double nmi = 0.0;
    double rand_index = 0.0;
    double mirkin_index = 0.0;
    std::size_t n = 0;
};

// Clustering accuracy after the optimal one-to-one relabeling of predicted
// clusters to ground truth (Hungarian algorithm on the contingency table,
// zero-padded square when cluster counts differ).
double matched_accuracy(const std::vector<int>& truth, const std::vector<int>& pred);

// Normalized mutual information, I(U;V) / sqrt(H(U) H(V)), natural logs.
// Both entropies zero -> 1.0; exactly one zero -> 0.0.
double nmi(const std::vector<int>& truth, const std::vector<int>& pred);

// Pair-counting Rand index and Mirkin index (1 - Rand) over all C(n,2) pairs.
std::pair<double, double> rand_and_mirkin(const std::vector<int>& truth, const std::vector<int>& pred);

MetricsReport evaluate_clustering(const std::vector<int>& truth, const std::vector<int>& pred);

// Minimum-cost assignment of rows to columns of a square cost matrix.
// Returns col index per row. O(n^3) potentials formulation.
std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost);

} // namespace mvnmf
