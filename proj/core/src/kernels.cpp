#include "mvnmf/kernels.hpp"

#include "mvnmf/errors.hpp"
#include "mvnmf/rng.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

namespace mvnmf {

KernelSpec KernelSpec::linear() {
    KernelSpec s;
    s.kind = Kind::Linear;
    return s;
}

KernelSpec KernelSpec::polynomial(double c, int d) {
    if (d < 1) throw InputError("polynomial kernel: degree must be >= 1");
    if (c < 0.0) throw InputError("polynomial kernel: offset c must be >= 0");
    KernelSpec s;
    s.kind = Kind::Polynomial;
    s.poly_c = c;
    s.poly_d = d;
    return s;
}

KernelSpec KernelSpec::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw InputError("gaussian kernel: sigma must be > 0");
    KernelSpec s;
    s.kind = Kind::Gaussian;
    s.sigma = sigma;
    return s;
}

std::string KernelSpec::name() const {
    switch (kind) {
    case Kind::Linear: return "linear";
    case Kind::Polynomial: return "polynomial";
    case Kind::Gaussian: return "gaussian";
    }
    return "unknown";
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size())
        throw InputError("kernel_eval: dimension mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 1) throw InputError("kernel_eval: empty vectors");
    switch (spec.kind) {
    case KernelSpec::Kind::Linear:
        return x.dot(y);
    case KernelSpec::Kind::Polynomial:
        return std::pow(x.dot(y) + spec.poly_c, spec.poly_d);
    case KernelSpec::Kind::Gaussian: {
        const double d2 = (x - y).squaredNorm();
        return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
    }
    }
    throw InputError("kernel_eval: unknown kernel kind");
}

GramMatrix gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.cols();
    if (n < 1) throw InputError("gram_matrix: need at least one sample");
    if (!X.allFinite()) throw InputError("gram_matrix: input contains non-finite entries");

    Eigen::MatrixXd K(n, n);
    switch (spec.kind) {
    case KernelSpec::Kind::Linear:
        K.noalias() = X.transpose() * X;
        break;
    case KernelSpec::Kind::Polynomial:
        K.noalias() = X.transpose() * X;
        K = (K.array() + spec.poly_c).pow(spec.poly_d).matrix();
        break;
    case KernelSpec::Kind::Gaussian: {
        const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
        const Eigen::VectorXd sq = X.colwise().squaredNorm();
        // ||xi - xj||^2 = ||xi||^2 + ||xj||^2 - 2 xi.xj, clamped against round-off
        K.noalias() = X.transpose() * X;
        K = (-(sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * K).cwiseMax(0.0) * inv)
                .array()
                .exp()
                .matrix();
        K.diagonal().setOnes();
        break;
    }
    }
    // guard floating-point asymmetry before anything feeds an eigensolver
    GramMatrix g;
    g.entries = 0.5 * (K + K.transpose());
    return g;
}

double median_pairwise_distance(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.cols();
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            dists.push_back((X.col(i) - X.col(j)).norm());
    if (dists.empty()) return 1.0;
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    double med = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
    return med > 0.0 ? med : 1.0;
}

GraphLaplacian similarity_graph(const Eigen::MatrixXd& X, std::optional<double> sigma_w) {
    const Eigen::Index n = X.cols();
    if (n < 2) throw InputError("similarity_graph: need at least two samples");
    if (!X.allFinite()) throw InputError("similarity_graph: input contains non-finite entries");

    double sigma = sigma_w.value_or(median_pairwise_distance(X));
    if (!(sigma > 0.0)) throw InputError("similarity_graph: sigma_w must be > 0");

    const double inv = 1.0 / (2.0 * sigma * sigma);
    GraphLaplacian g;
    g.similarity.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g.similarity(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double w = std::exp(-(X.col(i) - X.col(j)).squaredNorm() * inv);
            g.similarity(i, j) = w;
            g.similarity(j, i) = w;
        }
    }
    g.degrees = g.similarity.rowwise().sum();
    g.laplacian = -g.similarity;
    g.laplacian.diagonal() += g.degrees;
    return g;
}

SpectralEstimate spectral_norm(const Eigen::MatrixXd& M, double tol, int max_iter) {
    const Eigen::Index n = M.rows();
    if (n != M.cols()) throw InputError("spectral_norm: matrix must be square");
    if (n == 0) throw InputError("spectral_norm: empty matrix");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw InputError("spectral_norm: matrix is not symmetric within 1e-10");

    SpectralEstimate est;
    if (n <= 64) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
        est.value = eig.eigenvalues().cwiseAbs().maxCoeff();
        return est;
    }

    Rng rng(0x5eed5eedULL ^ static_cast<std::uint64_t>(n));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform() - 0.5;
    v.normalize();

    double rayleigh = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd mv = M * v;
        const double r = std::abs(v.dot(mv)); // v is unit
        if (it > 0 && std::abs(r - rayleigh) < tol) {
            est.value = r;
            return est;
        }
        rayleigh = r;
        const double norm = mv.norm();
        if (norm == 0.0) { // v in the null space; M acted as zero on it
            est.value = 0.0;
            return est;
        }
        v = mv / norm;
    }
    est.value = rayleigh;
    est.converged = false;
    return est;
}

} // namespace mvnmf
