#include "mvnmf/solver.hpp"

#include "mvnmf/errors.hpp"
#include "mvnmf/rng.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>

namespace mvnmf {

namespace {

void check_shapes(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                  const Eigen::MatrixXd& G_star, const GraphLaplacian& L) {
    const Eigen::Index n = K.size();
    const Eigen::Index k = P.cols();
    if (K.entries.cols() != n || P.rows() != n || G.rows() != k || G.cols() != n ||
        G_star.rows() != k || G_star.cols() != n || L.laplacian.rows() != n ||
        L.laplacian.cols() != n)
        throw InputError("solver: inconsistent shapes between K, P, G, G_star and L");
}

// Broadcast a 1-or-v sized parameter list to exactly v entries.
template <typename T>
std::vector<T> per_view(const std::vector<T>& values, std::size_t v, const char* what) {
    if (values.size() == v) return values;
    if (values.size() == 1) return std::vector<T>(v, values.front());
    throw InputError(std::string("solver: ") + what + " must have 1 or " + std::to_string(v) +
                     " entries, got " + std::to_string(values.size()));
}

double fit_term(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G) {
    const Eigen::MatrixXd PtK = P.transpose() * K.entries; // k x n
    const Eigen::MatrixXd PtKP = PtK * P;                  // k x k
    double fit = K.entries.trace();
    fit -= 2.0 * PtK.cwiseProduct(G).sum();                       // tr(KPG)
    fit += PtKP.cwiseProduct(G * G.transpose()).sum();            // tr(G'P'KPG)
    if (fit >= -1e-9 && fit < 0.0) fit = 0.0;                     // round-off
    return fit;
}

struct ViewContext {
    GramMatrix K;
    GraphLaplacian L;
    double sigma_max_L = 0.0;
    double lambda = 1.0;
    double theta = 0.0;
};

// Shared by the public op and the fit loop so both take identical steps.
Eigen::MatrixXd pgd_step_cached(const Eigen::MatrixXd& PtK, const Eigen::MatrixXd& PtKP,
                                double sigma_max_PtKP, const Eigen::MatrixXd& G,
                                const Eigen::MatrixXd& G_star, double lambda, double theta,
                                const Eigen::MatrixXd& L, double sigma_max_L) {
    const double lips = 2.0 * (sigma_max_PtKP + lambda + theta * sigma_max_L);
    if (!(lips > 0.0)) throw SolverError("pgd_step_G: non-positive Lipschitz constant");
    Eigen::MatrixXd grad = 2.0 * (PtKP * G - PtK + lambda * (G - G_star) + theta * (G * L));
    return (G - grad / lips).cwiseMax(0.0);
}

double sigma_max_sym(const Eigen::MatrixXd& M) {
    // symmetrize against round-off before the eigensolve
    return spectral_norm(0.5 * (M + M.transpose())).safe();
}

} // namespace

double view_loss(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                 const Eigen::MatrixXd& G_star, double lambda, double theta,
                 const GraphLaplacian& L) {
    check_shapes(K, P, G, G_star, L);
    double q = fit_term(K, P, G);
    q += lambda * (G - G_star).squaredNorm();
    q += theta * (G * L.laplacian).cwiseProduct(G).sum(); // tr(GLG')
    return q;
}

Eigen::MatrixXd update_P(const Eigen::MatrixXd& G, double ridge) {
    if (ridge < 0.0) throw InputError("update_P: ridge must be >= 0");
    const Eigen::Index k = G.rows();
    Eigen::MatrixXd M = G * G.transpose();
    M.diagonal().array() += ridge;
    const auto ldlt = M.ldlt();
    Eigen::MatrixXd Pt = ldlt.solve(G); // (GG' + ridge I)^-1 G  ==  P'
    if (ldlt.info() != Eigen::Success || !Pt.allFinite())
        throw SolverError("update_P: GG' + ridge*I is numerically singular; increase ridge (k=" +
                          std::to_string(k) + ")");
    return Pt.transpose();
}

Eigen::MatrixXd grad_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                       const Eigen::MatrixXd& G_star, double lambda, double theta,
                       const GraphLaplacian& L) {
    check_shapes(K, P, G, G_star, L);
    const Eigen::MatrixXd PtK = P.transpose() * K.entries;
    return 2.0 * (PtK * P * G - PtK + lambda * (G - G_star) + theta * (G * L.laplacian));
}

double lipschitz_G(const GramMatrix& K, const Eigen::MatrixXd& P, double lambda, double theta,
                   double sigma_max_L) {
    const Eigen::MatrixXd PtKP = P.transpose() * K.entries * P;
    return 2.0 * (sigma_max_sym(PtKP) + lambda + theta * sigma_max_L);
}

Eigen::MatrixXd pgd_step_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                           const Eigen::MatrixXd& G_star, double lambda, double theta,
                           const GraphLaplacian& L) {
    return pgd_step_G(K, P, G, G_star, lambda, theta, L,
                      spectral_norm(L.laplacian).safe());
}

Eigen::MatrixXd pgd_step_G(const GramMatrix& K, const Eigen::MatrixXd& P, const Eigen::MatrixXd& G,
                           const Eigen::MatrixXd& G_star, double lambda, double theta,
                           const GraphLaplacian& L, double sigma_max_L) {
    check_shapes(K, P, G, G_star, L);
    const Eigen::MatrixXd PtK = P.transpose() * K.entries;
    const Eigen::MatrixXd PtKP = PtK * P;
    return pgd_step_cached(PtK, PtKP, sigma_max_sym(PtKP), G, G_star, lambda, theta, L.laplacian,
                           sigma_max_L);
}

Eigen::MatrixXd update_G_star(const std::vector<Eigen::MatrixXd>& G_views,
                              const Eigen::VectorXd& beta, const std::vector<double>& lambda,
                              double gamma) {
    const std::size_t v = G_views.size();
    if (v == 0) throw InputError("update_G_star: no views");
    if (static_cast<std::size_t>(beta.size()) != v || lambda.size() != v)
        throw InputError("update_G_star: beta and lambda must have one entry per view");

    Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(G_views[0].rows(), G_views[0].cols());
    double denominator = 0.0;
    for (std::size_t a = 0; a < v; ++a) {
        if (G_views[a].rows() != numerator.rows() || G_views[a].cols() != numerator.cols())
            throw InputError("update_G_star: view matrices differ in shape");
        const double w = std::pow(beta(static_cast<Eigen::Index>(a)), gamma) * lambda[a];
        numerator += w * G_views[a];
        denominator += w;
    }
    if (denominator < 1e-300)
        throw SolverError("update_G_star: all view weights vanished (denominator " +
                          std::to_string(denominator) + ")");
    return numerator / denominator;
}

Eigen::VectorXd update_beta(const Eigen::VectorXd& q, double gamma) {
    const Eigen::Index v = q.size();
    if (v == 0) throw InputError("update_beta: empty loss vector");
    if (gamma < 0.0) throw InputError("update_beta: gamma must be >= 0");

    if (gamma == 0.0) return Eigen::VectorXd::Constant(v, 1.0 / static_cast<double>(v));

    const Eigen::VectorXd qc = q.cwiseMax(1e-12);
    if (gamma == 1.0) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < v; ++a)
            if (qc(a) < qc(best)) best = a;
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(v);
        beta(best) = 1.0;
        return beta;
    }

    // q^{1/(1-gamma)} in log space; exponents get large as gamma -> 1
    const double expo = 1.0 / (1.0 - gamma);
    Eigen::VectorXd logw = expo * qc.array().log();
    const double top = logw.maxCoeff();
    Eigen::VectorXd w = (logw.array() - top).exp();
    return w / w.sum();
}

double total_objective(const Eigen::VectorXd& q, const Eigen::VectorXd& beta, double gamma) {
    if (q.size() != beta.size()) throw InputError("total_objective: size mismatch");
    double total = 0.0;
    for (Eigen::Index a = 0; a < q.size(); ++a)
        total += std::pow(beta(a), gamma) * q(a);
    return total;
}

FactorizationState fit(const MultiViewDataset& dataset, const SolverConfig& config) {
    dataset.validate();
    const std::size_t v = dataset.n_views();
    const Eigen::Index n = dataset.n_samples();
    if (config.k < 2) throw InputError("fit: k must be >= 2");
    if (config.k > n) throw InputError("fit: k must not exceed the sample count");
    if (config.gamma < 0.0) throw InputError("fit: gamma must be >= 0");
    if (config.max_iter < 1 || config.restarts < 1 || config.inner_pgd_steps < 1)
        throw InputError("fit: max_iter, restarts and inner_pgd_steps must be >= 1");
    const std::vector<double> lambda = per_view(config.lambda, v, "lambda");
    const std::vector<double> theta = per_view(config.theta, v, "theta");
    const std::vector<KernelSpec> kernels = per_view(config.kernels, v, "kernels");
    for (std::size_t a = 0; a < v; ++a) {
        if (!(lambda[a] > 0.0)) throw InputError("fit: lambda must be > 0 in every view");
        if (theta[a] < 0.0) throw InputError("fit: theta must be >= 0 in every view");
    }

    std::vector<ViewContext> ctx(v);
    for (std::size_t a = 0; a < v; ++a) {
        ctx[a].K = gram_matrix(kernels[a], dataset.views[a].X);
        ctx[a].L = similarity_graph(dataset.views[a].X, config.graph_sigma);
        ctx[a].sigma_max_L = spectral_norm(ctx[a].L.laplacian).safe();
        ctx[a].lambda = lambda[a];
        ctx[a].theta = theta[a];
    }

    const int k = config.k;
    auto compute_q = [&](const std::vector<Eigen::MatrixXd>& P,
                         const std::vector<Eigen::MatrixXd>& G,
                         const Eigen::MatrixXd& G_star) {
        Eigen::VectorXd q(static_cast<Eigen::Index>(v));
        for (std::size_t a = 0; a < v; ++a) {
            q(static_cast<Eigen::Index>(a)) =
                view_loss(ctx[a].K, P[a], G[a], G_star, ctx[a].lambda, ctx[a].theta, ctx[a].L);
            if (!std::isfinite(q(static_cast<Eigen::Index>(a))))
                throw SolverError("fit: non-finite objective in view " + std::to_string(a) +
                                  " ('" + dataset.views[a].name + "'); check the kernel settings");
        }
        return q;
    };

    FactorizationState best;
    double best_objective = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < config.restarts; ++restart) {
        const std::uint64_t restart_seed = derive_seed(config.seed, static_cast<std::uint64_t>(restart));

        FactorizationState state;
        state.P.resize(v);
        state.G.resize(v);
        for (std::size_t a = 0; a < v; ++a) {
            Rng rng(derive_seed(restart_seed, static_cast<std::uint64_t>(a)));
            state.G[a] = uniform_matrix(k, n, rng);
            state.P[a] = update_P(state.G[a], config.ridge);
        }
        state.G_star = Eigen::MatrixXd::Zero(k, n);
        for (std::size_t a = 0; a < v; ++a) state.G_star += state.G[a];
        state.G_star /= static_cast<double>(v);
        state.beta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v), 1.0 / static_cast<double>(v));

        state.per_view_loss = compute_q(state.P, state.G, state.G_star);
        state.objective_trace.push_back(total_objective(state.per_view_loss, state.beta, config.gamma));
        state.q_trace.push_back(state.per_view_loss);
        state.beta_trace.push_back(state.beta);

        for (int iter = 1; iter <= config.max_iter; ++iter) {
            for (std::size_t a = 0; a < v; ++a) {
                state.P[a] = update_P(state.G[a], config.ridge);
                const Eigen::MatrixXd PtK = state.P[a].transpose() * ctx[a].K.entries;
                const Eigen::MatrixXd PtKP = PtK * state.P[a];
                const double sigma_ptkp = sigma_max_sym(PtKP);
                for (int s = 0; s < config.inner_pgd_steps; ++s)
                    state.G[a] = pgd_step_cached(PtK, PtKP, sigma_ptkp, state.G[a], state.G_star,
                                                 ctx[a].lambda, ctx[a].theta, ctx[a].L.laplacian,
                                                 ctx[a].sigma_max_L);
            }
            state.G_star = update_G_star(state.G, state.beta, lambda, config.gamma);
            state.per_view_loss = compute_q(state.P, state.G, state.G_star);
            state.beta = update_beta(state.per_view_loss, config.gamma);

            const double objective = total_objective(state.per_view_loss, state.beta, config.gamma);
            if (!std::isfinite(objective)) throw SolverError("fit: non-finite total objective");
            const double previous = state.objective_trace.back();
            state.objective_trace.push_back(objective);
            state.q_trace.push_back(state.per_view_loss);
            state.beta_trace.push_back(state.beta);
            state.iterations = iter;
            if (std::abs(previous - objective) <= config.rel_tol * std::max(std::abs(previous), 1e-30))
                break;
        }

        if (state.objective_trace.back() < best_objective) {
            best_objective = state.objective_trace.back();
            best = std::move(state);
        }
    }
    return best;
}

std::vector<int> assign_clusters(const Eigen::MatrixXd& G_star) {
    std::vector<int> labels(static_cast<std::size_t>(G_star.cols()));
    for (Eigen::Index j = 0; j < G_star.cols(); ++j) {
        int arg = 0;
        for (Eigen::Index i = 1; i < G_star.rows(); ++i)
            if (G_star(i, j) > G_star(arg, j)) arg = static_cast<int>(i);
        labels[static_cast<std::size_t>(j)] = arg;
    }
    return labels;
}

} // namespace mvnmf
