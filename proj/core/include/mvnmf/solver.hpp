#pragma once

#include "mvnmf/dataset.hpp"
#include "mvnmf/kernels.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace mvnmf {

// Settings for the adaptive weighted kernel multi-view factorization.
// lambda, theta and kernels hold one entry per view, or a single entry
// broadcast to every view.
struct SolverConfig {
    int k = 2;                                      // cluster count, >= 2
    std::vector<double> lambda{1.0};                // consensus weights, > 0
    std::vector<double> theta{1.0};                 // graph regularization, >= 0
    double gamma = 2.0;                             // view-weight order, >= 0
    std::vector<KernelSpec> kernels{KernelSpec::linear()};
    std::optional<double> graph_sigma;              // similarity bandwidth; nullopt = median heuristic
    int max_iter = 100;
    double rel_tol = 1e-6;
    int inner_pgd_steps = 1;
    int restarts = 10;
    std::uint64_t seed = 0;
    double ridge = 1e-10;                           // regularizer for the P solve
};

// Result of one fit: per-view factor pairs, the consensus membership matrix,
// simplex view weights and the (non-increasing) objective trace.
struct FactorizationState {
    std::vector<Eigen::MatrixXd> P; // per view, n x k, mixed signs
    std::vector<Eigen::MatrixXd> G; // per view, k x n, nonnegative
    Eigen::MatrixXd G_star;         // k x n consensus, nonnegative
    Eigen::VectorXd beta;           // view weights on the probability simplex
    Eigen::VectorXd per_view_loss;  // q, one entry per view
    std::vector<double> objective_trace;
    std::vector<Eigen::VectorXd> q_trace;    // per-view losses per recorded iteration
    std::vector<Eigen::VectorXd> beta_trace; // weights per recorded iteration
    int iterations = 0;
};

// Per-view loss
//   q = tr(K) - 2 tr(KPG) + tr(G'P'KPG) + lambda ||G - G*||_F^2 + theta tr(GLG')
// evaluated with the kernel trick; the first three terms equal
// ||phi(X) - phi(X) P G||_F^2 and are clamped at 0 against round-off.
double view_loss(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                 const Eigen::MatrixXd& G_star, double lambda, double theta,
                 const GraphLaplacian& L);

// Exact minimizer of the fit term over P for fixed G: G'(GG' + ridge I)^-1.
Eigen::MatrixXd update_P(const Eigen::MatrixXd& G, double ridge = 1e-10);

// Gradient of the per-view loss with respect to G:
//   2 (P'KPG - P'K + lambda (G - G*) + theta G L)
Eigen::MatrixXd grad_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                       const Eigen::MatrixXd& G_star, double lambda, double theta,
                       const GraphLaplacian& L);

// Step bound 2 [sigma_max(P'KP) + lambda + theta sigma_max(L)].
double lipschitz_G(const GramMatrix& K, const Eigen::MatrixXd& P, double lambda, double theta,
                   double sigma_max_L);

// One projected gradient step on G with step size 1/Lipschitz:
// max{G - (1/Lips) grad, 0}. Never increases the view loss. The overload
// taking sigma_max_L avoids recomputing the Laplacian spectral norm.
Eigen::MatrixXd pgd_step_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                           const Eigen::MatrixXd& G_star, double lambda, double theta,
                           const GraphLaplacian& L);
Eigen::MatrixXd pgd_step_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                           const Eigen::MatrixXd& G_star, double lambda, double theta,
                           const GraphLaplacian& L, double sigma_max_L);

// Consensus update (sum_a beta_a^gamma lambda_a G_a) / (sum_a beta_a^gamma lambda_a).
Eigen::MatrixXd update_G_star(const std::vector<Eigen::MatrixXd>& G_views,
                              const Eigen::VectorXd& beta, const std::vector<double>& lambda,
                              double gamma);

// Simplex weights minimizing sum_a beta_a^gamma q_a:
//   gamma not in {0,1}:  beta_a = q_a^{1/(1-gamma)} / sum_b q_b^{1/(1-gamma)}
//   gamma = 0: uniform; gamma = 1: one-hot on argmin q (ties -> lowest view).
// q is clamped below at 1e-12 before the power.
Eigen::VectorXd update_beta(const Eigen::VectorXd& q, double gamma);

// Weighted total sum_a beta_a^gamma q_a.
double total_objective(const Eigen::VectorXd& q, const Eigen::VectorXd& beta, double gamma);

// Alternating minimization: per view P then G (inner_pgd_steps projected
// gradient steps), consensus, per-view losses, weights; stops when the
// relative objective change drops below rel_tol or max_iter is reached.
// Runs `restarts` seeded starts and returns the one with the lowest final
// objective. Seeding: restart r uses derive_seed(config.seed, r), and view a
// draws its initial G from Rng(derive_seed(restart_seed, a)); P comes from
// update_P, G* is the plain mean of the initial G's, beta starts uniform.
FactorizationState fit(const MultiViewDataset& dataset, const SolverConfig& config);

// Column-wise argmax of G_star; ties break toward the smallest row index.
std::vector<int> assign_clusters(const Eigen::MatrixXd& G_star);

} // namespace mvnmf
