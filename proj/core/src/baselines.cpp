#include "mvnmf/baselines.hpp"

#include "mvnmf/errors.hpp"
#include "mvnmf/rng.hpp"
#include "mvnmf/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mvnmf {

namespace {

void check_nonnegative(const Eigen::MatrixXd& X, const std::string& what) {
    if (X.size() > 0 && X.minCoeff() < 0.0)
        throw InputError(what + " has negative entries; apply min-max scaling first "
                         "(minmax_scale maps every feature to [0,1])");
}

double sigma_max_sym(const Eigen::MatrixXd& M) {
    return spectral_norm(0.5 * (M + M.transpose())).safe();
}

Eigen::MatrixXd pgd_step_F(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                           const Eigen::MatrixXd& G) {
    const Eigen::MatrixXd GGt = G * G.transpose();
    const double lips = 2.0 * sigma_max_sym(GGt);
    if (!(lips > 0.0)) return F; // G identically zero; nothing to move against
    const Eigen::MatrixXd grad = 2.0 * (F * GGt - X * G.transpose());
    return (F - grad / lips).cwiseMax(0.0);
}

// lambda <= 0 disables the consensus coupling (single-view objective).
Eigen::MatrixXd pgd_step_G_euclid(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F,
                                  const Eigen::MatrixXd& G, const Eigen::MatrixXd& G_star,
                                  double lambda, double theta, const Eigen::MatrixXd& L,
                                  double sigma_max_L) {
    const Eigen::MatrixXd FtF = F.transpose() * F;
    const double use_lambda = lambda > 0.0 ? lambda : 0.0;
    const double lips = 2.0 * (sigma_max_sym(FtF) + use_lambda + theta * sigma_max_L);
    if (!(lips > 0.0)) return G;
    Eigen::MatrixXd grad = 2.0 * (FtF * G - F.transpose() * X + theta * (G * L));
    if (lambda > 0.0) grad += 2.0 * lambda * (G - G_star);
    return (G - grad / lips).cwiseMax(0.0);
}

double euclid_loss(const Eigen::MatrixXd& X, const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                   double theta, const Eigen::MatrixXd& L) {
    return (X - F * G).squaredNorm() + theta * (G * L).cwiseProduct(G).sum();
}

template <typename T>
std::vector<T> per_view(const std::vector<T>& values, std::size_t v, const char* what) {
    if (values.size() == v) return values;
    if (values.size() == 1) return std::vector<T>(v, values.front());
    throw InputError(std::string("baselines: ") + what + " must have 1 or " + std::to_string(v) +
                     " entries, got " + std::to_string(values.size()));
}

// One multi-view run from a fixed starting point. adaptive=false freezes the
// weights at uniform (plain mnmf); otherwise beta follows update_beta(q, gamma).
MnmfResult run_multi(const MultiViewDataset& dataset, const std::vector<double>& lambda,
                     const std::vector<double>& theta, bool adaptive, double gamma,
                     const BaselineConfig& config, MnmfResult state,
                     const std::vector<GraphLaplacian>& L, const std::vector<double>& sigma_L) {
    const std::size_t v = dataset.n_views();
    const bool single_view = v == 1;

    auto consensus = [&]() {
        if (single_view) return state.G[0]; // exact minimizer, eliminated analytically
        return update_G_star(state.G, state.beta, lambda, adaptive ? gamma : 0.0);
    };
    auto compute_q = [&]() {
        Eigen::VectorXd q(static_cast<Eigen::Index>(v));
        for (std::size_t a = 0; a < v; ++a) {
            double qa = euclid_loss(dataset.views[a].X, state.F[a], state.G[a], theta[a],
                                    L[a].laplacian);
            if (!single_view) qa += lambda[a] * (state.G[a] - state.G_star).squaredNorm();
            if (!std::isfinite(qa))
                throw SolverError("baselines: non-finite objective in view " + std::to_string(a) +
                                  " ('" + dataset.views[a].name + "')");
            q(static_cast<Eigen::Index>(a)) = qa;
        }
        return q;
    };

    state.G_star = consensus();
    state.per_view_loss = compute_q();
    state.objective_trace.push_back(
        total_objective(state.per_view_loss, state.beta, adaptive ? gamma : 0.0));
    state.q_trace.push_back(state.per_view_loss);
    state.beta_trace.push_back(state.beta);

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        for (std::size_t a = 0; a < v; ++a) {
            const Eigen::MatrixXd& X = dataset.views[a].X;
            for (int s = 0; s < config.inner_pgd_steps; ++s)
                state.F[a] = pgd_step_F(X, state.F[a], state.G[a]);
            const double lam = single_view ? 0.0 : lambda[a];
            for (int s = 0; s < config.inner_pgd_steps; ++s)
                state.G[a] = pgd_step_G_euclid(X, state.F[a], state.G[a], state.G_star, lam,
                                               theta[a], L[a].laplacian, sigma_L[a]);
        }
        state.G_star = consensus();
        state.per_view_loss = compute_q();
        if (adaptive) state.beta = update_beta(state.per_view_loss, gamma);

        const double objective =
            total_objective(state.per_view_loss, state.beta, adaptive ? gamma : 0.0);
        const double previous = state.objective_trace.back();
        state.objective_trace.push_back(objective);
        state.q_trace.push_back(state.per_view_loss);
        state.beta_trace.push_back(state.beta);
        state.iterations = iter;
        if (std::abs(previous - objective) <= config.rel_tol * std::max(std::abs(previous), 1e-30))
            break;
    }
    return state;
}

MnmfResult fit_multi(const MultiViewDataset& dataset, int k, const std::vector<double>& lambda_in,
                     const std::vector<double>& theta_in, bool adaptive, double gamma,
                     const BaselineConfig& config, const std::optional<BaselineInit>& init) {
    dataset.validate();
    const std::size_t v = dataset.n_views();
    const Eigen::Index n = dataset.n_samples();
    if (k < 1) throw InputError("baselines: k must be >= 1");
    for (const auto& view : dataset.views) {
        check_nonnegative(view.X, "view '" + view.name + "'");
        if (k > std::min(view.X.rows(), view.X.cols()))
            throw InputError("baselines: k exceeds min(m, n) of view '" + view.name + "'");
    }
    const std::vector<double> lambda = per_view(lambda_in, v, "lambda");
    const std::vector<double> theta = per_view(theta_in, v, "theta");
    for (std::size_t a = 0; a < v; ++a) {
        if (!(lambda[a] > 0.0)) throw InputError("baselines: lambda must be > 0 in every view");
        if (theta[a] < 0.0) throw InputError("baselines: theta must be >= 0 in every view");
    }
    if (adaptive && gamma < 0.0) throw InputError("baselines: gamma must be >= 0");

    std::vector<GraphLaplacian> L(v);
    std::vector<double> sigma_L(v);
    for (std::size_t a = 0; a < v; ++a) {
        L[a] = similarity_graph(dataset.views[a].X, config.graph_sigma);
        sigma_L[a] = spectral_norm(L[a].laplacian).safe();
    }

    auto fresh_state = [&](std::uint64_t restart_seed) {
        MnmfResult s;
        s.F.resize(v);
        s.G.resize(v);
        for (std::size_t a = 0; a < v; ++a) {
            Rng rf(derive_seed(restart_seed, 2 * static_cast<std::uint64_t>(a)));
            Rng rg(derive_seed(restart_seed, 2 * static_cast<std::uint64_t>(a) + 1));
            s.F[a] = uniform_matrix(dataset.views[a].X.rows(), k, rf);
            s.G[a] = uniform_matrix(k, n, rg);
        }
        s.beta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v), 1.0 / static_cast<double>(v));
        return s;
    };

    if (init) {
        if (init->F.size() != v || init->G.size() != v)
            throw InputError("baselines: init must supply F and G for every view");
        MnmfResult s;
        s.F = init->F;
        s.G = init->G;
        s.beta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(v), 1.0 / static_cast<double>(v));
        return run_multi(dataset, lambda, theta, adaptive, gamma, config, std::move(s), L, sigma_L);
    }

    MnmfResult best;
    double best_objective = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < config.restarts; ++restart) {
        MnmfResult s = run_multi(dataset, lambda, theta, adaptive, gamma, config,
                                 fresh_state(derive_seed(config.seed, static_cast<std::uint64_t>(restart))),
                                 L, sigma_L);
        if (s.objective_trace.back() < best_objective) {
            best_objective = s.objective_trace.back();
            best = std::move(s);
        }
    }
    return best;
}

} // namespace

GnmfResult gnmf_fit(const Eigen::MatrixXd& X, int k, double theta, const BaselineConfig& config,
                    const std::optional<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& init) {
    MultiViewDataset ds;
    ds.views.push_back({"x", X});
    std::optional<BaselineInit> multi_init;
    if (init) multi_init = BaselineInit{{init->first}, {init->second}};

    const MnmfResult r = fit_multi(ds, k, {1.0}, {theta}, /*adaptive=*/false, 0.0, config, multi_init);
    GnmfResult out;
    out.F = r.F[0];
    out.G = r.G[0];
    out.objective_trace = r.objective_trace;
    out.iterations = r.iterations;
    return out;
}

Eigen::MatrixXd concat_views(const MultiViewDataset& dataset) {
    dataset.validate();
    Eigen::Index total = 0;
    for (const auto& v : dataset.views) total += v.X.rows();
    Eigen::MatrixXd out(total, dataset.n_samples());
    Eigen::Index row = 0;
    for (const auto& v : dataset.views) {
        out.middleRows(row, v.X.rows()) = v.X;
        row += v.X.rows();
    }
    return out;
}

MnmfResult mnmf_fit(const MultiViewDataset& dataset, int k, const std::vector<double>& lambda,
                    const std::vector<double>& theta, const BaselineConfig& config,
                    const std::optional<BaselineInit>& init) {
    return fit_multi(dataset, k, lambda, theta, /*adaptive=*/false, 0.0, config, init);
}

MnmfResult awmnmf_fit(const MultiViewDataset& dataset, int k, const std::vector<double>& lambda,
                      const std::vector<double>& theta, double gamma, const BaselineConfig& config,
                      const std::optional<BaselineInit>& init) {
    return fit_multi(dataset, k, lambda, theta, /*adaptive=*/true, gamma, config, init);
}

} // namespace mvnmf
