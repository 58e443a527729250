#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

namespace mvnmf {

// Kernel family with its hyperparameters. Construct through the factory
// functions; they validate the parameter ranges.
struct KernelSpec {
    enum class Kind { Linear, Polynomial, Gaussian };

    Kind kind = Kind::Linear;
    double poly_c = 1.0;  // polynomial offset, >= 0
    int poly_d = 2;       // polynomial degree, >= 1
    double sigma = 1.0;   // gaussian bandwidth, > 0

    static KernelSpec linear();
    static KernelSpec polynomial(double c, int d);
    static KernelSpec gaussian(double sigma);

    std::string name() const;
};

// n x n matrix of pairwise kernel evaluations, K(i,j) = <phi(x_i), phi(x_j)>.
// Symmetrized on construction; Gaussian diagonals are exactly 1.
struct GramMatrix {
    Eigen::MatrixXd entries;

    Eigen::Index size() const { return entries.rows(); }
};

// Gaussian similarity graph over samples with L = D - W. Self-loops are
// retained (W(i,i) = 1); D - W cancels them on constant vectors.
struct GraphLaplacian {
    Eigen::MatrixXd similarity; // W, nonnegative symmetric
    Eigen::VectorXd degrees;    // row sums of W
    Eigen::MatrixXd laplacian;  // L = diag(degrees) - W
};

// Largest singular value estimate. `converged` is false when power iteration
// ran out of iterations; callers building Lipschitz constants should then use
// safe() which pads the estimate by 10%.
struct SpectralEstimate {
    double value = 0.0;
    bool converged = true;

    double safe() const { return converged ? value : 1.1 * value; }
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// X is m x n with samples as columns.
GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);

// Median of all pairwise Euclidean distances between columns of X; 1.0 when
// the median is zero. The default bandwidth for similarity_graph.
double median_pairwise_distance(const Eigen::MatrixXd& X);

// W(i,j) = exp(-||x_i - x_j||^2 / (2 sigma_w^2)). sigma_w = nullopt selects
// the median heuristic.
GraphLaplacian similarity_graph(const Eigen::MatrixXd& X, std::optional<double> sigma_w = std::nullopt);

// Largest absolute eigenvalue of a symmetric matrix. Exact eigensolve for
// dimension <= 64, seeded power iteration above that, converging when
// successive Rayleigh quotients differ by less than tol.
SpectralEstimate spectral_norm(const Eigen::MatrixXd& M, double tol = 1e-7, int max_iter = 1000);

} // namespace mvnmf
