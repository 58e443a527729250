#pragma once

#include "mvnmf/dataset.hpp"
#include "mvnmf/kernels.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace mvnmf {

// Which comparison method to run.
struct BaselineKind {
    enum class Variant { SingleView, Concatenated, MultiView, AdaptiveWeightedMultiView };
    Variant variant = Variant::MultiView;
    int view_index = 0; // SingleView only
};

// Loop controls shared by all baseline fits.
struct BaselineConfig {
    std::optional<double> graph_sigma; // similarity bandwidth; nullopt = median heuristic
    int max_iter = 100;
    double rel_tol = 1e-6;
    int inner_pgd_steps = 1;
    int restarts = 10;
    std::uint64_t seed = 0;
};

// Explicit starting point, used by tests. When given, a single run replaces
// the random restarts.
struct BaselineInit {
    std::vector<Eigen::MatrixXd> F; // per view, m_a x k
    std::vector<Eigen::MatrixXd> G; // per view, k x n
};

struct GnmfResult {
    Eigen::MatrixXd F; // m x k, nonnegative
    Eigen::MatrixXd G; // k x n, nonnegative
    std::vector<double> objective_trace;
    int iterations = 0;
};

struct MnmfResult {
    std::vector<Eigen::MatrixXd> F;
    std::vector<Eigen::MatrixXd> G;
    Eigen::MatrixXd G_star;
    Eigen::VectorXd beta;          // uniform for the unweighted variant
    Eigen::VectorXd per_view_loss; // q
    std::vector<double> objective_trace;
    std::vector<Eigen::VectorXd> q_trace;
    std::vector<Eigen::VectorXd> beta_trace;
    int iterations = 0;
};

// Single-view graph-regularized NMF,
//   min ||X - FG||_F^2 + theta tr(GLG'),  F, G >= 0,
// by alternating projected gradient descent (F step with Lipschitz constant
// 2 sigma_max(GG'), G step with 2 [sigma_max(F'F) + theta sigma_max(L)]).
// X must be nonnegative; min-max scale it first.
GnmfResult gnmf_fit(const Eigen::MatrixXd& X, int k, double theta, const BaselineConfig& config,
                    const std::optional<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& init = std::nullopt);

// Row-wise stacking of all views in view order.
Eigen::MatrixXd concat_views(const MultiViewDataset& dataset);

// Multi-view NMF with a consensus membership matrix; G* is the exact
// lambda-weighted average of the per-view G's. With a single view the
// consensus is eliminated analytically and this reduces to gnmf_fit.
MnmfResult mnmf_fit(const MultiViewDataset& dataset, int k, const std::vector<double>& lambda,
                    const std::vector<double>& theta, const BaselineConfig& config,
                    const std::optional<BaselineInit>& init = std::nullopt);

// Adaptive weighted multi-view NMF: mnmf updates interleaved with the
// solver's weighted consensus and simplex weight updates. gamma = 0 keeps
// the weights uniform and reproduces mnmf_fit exactly.
MnmfResult awmnmf_fit(const MultiViewDataset& dataset, int k, const std::vector<double>& lambda,
                      const std::vector<double>& theta, double gamma, const BaselineConfig& config,
                      const std::optional<BaselineInit>& init = std::nullopt);

} // namespace mvnmf
