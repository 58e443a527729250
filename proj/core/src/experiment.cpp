#include "mvnmf/experiment.hpp"

#include "mvnmf/errors.hpp"
#include "mvnmf/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace mvnmf {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// formatting helpers
// ---------------------------------------------------------------------------

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim_copy(item));
    if (!value.empty() && value.back() == ',') out.push_back("");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    const std::string t = trim_copy(value);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw InputError("config key '" + key + "': '" + value + "' is not a number");
    return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
    long long v = 0;
    const std::string t = trim_copy(value);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw InputError("config key '" + key + "': '" + value + "' is not an integer");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const std::string t = trim_copy(value);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size())
        throw InputError("config key '" + key + "': '" + value + "' is not an unsigned integer");
    return v;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
    if (out.empty()) throw InputError("config key '" + key + "': list must not be empty");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value))
        out.push_back(static_cast<int>(parse_integer(key, item)));
    if (out.empty()) throw InputError("config key '" + key + "': list must not be empty");
    return out;
}

// ---------------------------------------------------------------------------
// per-run machinery
// ---------------------------------------------------------------------------

struct RunOutput {
    std::vector<int> assignments;
    int iterations = 0;
    double objective = 0.0;
    std::vector<double> obj_trace;
    std::vector<Eigen::VectorXd> q_trace;
    std::vector<Eigen::VectorXd> beta_trace;
    std::optional<MetricsReport> metrics;
};

bool method_is_baseline(Method m) { return m != Method::KernelMvnmf; }

std::vector<KernelSpec> resolve_kernels(const ExperimentConfig& cfg, const GridPoint& gp,
                                        const MultiViewDataset& data) {
    const std::size_t v = data.n_views();
    if (cfg.kernel.size() != 1 && cfg.kernel.size() != v)
        throw InputError("config key 'kernel': need 1 or " + std::to_string(v) + " entries");
    std::vector<KernelSpec> specs(v);
    for (std::size_t a = 0; a < v; ++a) {
        const std::string& name = cfg.kernel.size() == 1 ? cfg.kernel[0] : cfg.kernel[a];
        if (name == "linear") {
            specs[a] = KernelSpec::linear();
        } else if (name == "polynomial") {
            specs[a] = KernelSpec::polynomial(cfg.poly_c, gp.degree.value_or(cfg.poly_d));
        } else if (name == "gaussian") {
            double sigma;
            if (gp.sigma)
                sigma = *gp.sigma;
            else if (cfg.gaussian_sigma)
                sigma = *cfg.gaussian_sigma;
            else
                sigma = median_pairwise_distance(data.views[a].X);
            specs[a] = KernelSpec::gaussian(sigma);
        } else {
            throw InputError("config key 'kernel': unknown kernel '" + name + "'");
        }
    }
    return specs;
}

BaselineConfig baseline_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    BaselineConfig bc;
    bc.graph_sigma = cfg.graph_sigma;
    bc.max_iter = cfg.max_iter;
    bc.rel_tol = cfg.rel_tol;
    bc.inner_pgd_steps = cfg.inner_pgd_steps;
    bc.restarts = cfg.restarts;
    bc.seed = seed;
    return bc;
}

RunOutput from_mnmf(const MnmfResult& r) {
    RunOutput out;
    out.assignments = assign_clusters(r.G_star);
    out.iterations = r.iterations;
    out.objective = r.objective_trace.back();
    out.obj_trace = r.objective_trace;
    out.q_trace = r.q_trace;
    out.beta_trace = r.beta_trace;
    return out;
}

RunOutput from_gnmf(const GnmfResult& r) {
    RunOutput out;
    out.assignments = assign_clusters(r.G);
    out.iterations = r.iterations;
    out.objective = r.objective_trace.back();
    out.obj_trace = r.objective_trace;
    for (const double q : r.objective_trace) {
        out.q_trace.push_back(Eigen::VectorXd::Constant(1, q));
        out.beta_trace.push_back(Eigen::VectorXd::Constant(1, 1.0));
    }
    return out;
}

// One method fit at one grid point with one evaluation seed. `raw` feeds the
// kernel solver (already scaled when the config says so), `scaled` feeds the
// baselines.
RunOutput run_one(const ExperimentConfig& cfg, const GridPoint& gp, Method method,
                  const MultiViewDataset& raw, const MultiViewDataset& scaled,
                  std::uint64_t eval_seed) {
    const std::vector<double> lambda = gp.lambda ? std::vector<double>{*gp.lambda} : cfg.lambda;
    const std::vector<double> theta = gp.theta ? std::vector<double>{*gp.theta} : cfg.theta;
    const double gamma = gp.gamma.value_or(cfg.gamma);

    RunOutput out;
    switch (method) {
    case Method::KernelMvnmf: {
        SolverConfig sc;
        sc.k = cfg.k;
        sc.lambda = lambda;
        sc.theta = theta;
        sc.gamma = gamma;
        sc.kernels = resolve_kernels(cfg, gp, raw);
        sc.graph_sigma = cfg.graph_sigma;
        sc.max_iter = cfg.max_iter;
        sc.rel_tol = cfg.rel_tol;
        sc.inner_pgd_steps = cfg.inner_pgd_steps;
        sc.restarts = cfg.restarts;
        sc.seed = eval_seed;
        const FactorizationState st = fit(raw, sc);
        out.assignments = assign_clusters(st.G_star);
        out.iterations = st.iterations;
        out.objective = st.objective_trace.back();
        out.obj_trace = st.objective_trace;
        out.q_trace = st.q_trace;
        out.beta_trace = st.beta_trace;
        break;
    }
    case Method::SingleView: {
        if (!cfg.view_index) throw InputError("method 'sv' requires config key 'view_index'");
        const int a = *cfg.view_index;
        if (a < 0 || a >= static_cast<int>(scaled.n_views()))
            throw InputError("view_index " + std::to_string(a) + " out of range");
        const double th = theta.size() == 1 ? theta[0] : theta[static_cast<std::size_t>(a)];
        out = from_gnmf(gnmf_fit(scaled.views[static_cast<std::size_t>(a)].X, cfg.k, th,
                                 baseline_config(cfg, eval_seed)));
        break;
    }
    case Method::Cnmf:
        out = from_gnmf(gnmf_fit(concat_views(scaled), cfg.k, theta[0],
                                 baseline_config(cfg, eval_seed)));
        break;
    case Method::Mnmf:
        out = from_mnmf(mnmf_fit(scaled, cfg.k, lambda, theta, baseline_config(cfg, eval_seed)));
        break;
    case Method::Awmnmf:
        out = from_mnmf(awmnmf_fit(scaled, cfg.k, lambda, theta, gamma,
                                   baseline_config(cfg, eval_seed)));
        break;
    }
    // raw always carries the dataset (scaled may be an empty placeholder for
    // kernel-only runs); labels are identical in both
    if (raw.labels) out.metrics = evaluate_clustering(*raw.labels, out.assignments);
    return out;
}

int thread_count(std::size_t items) {
    unsigned n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("MVNMF_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) n = static_cast<unsigned>(parsed);
    }
    if (n < 1) n = 1;
    return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(items, 1)));
}

// Runs fn(i) for i in [0, items) on a small worker pool. Exceptions are
// captured per item so completed work survives a failure elsewhere.
std::vector<std::exception_ptr> parallel_for(std::size_t items,
                                             const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(items);
    const int threads = thread_count(items);
    if (threads <= 1) {
        for (std::size_t i = 0; i < items; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < items; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    return errors;
}

[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& ctx) {
    try {
        std::rethrow_exception(ep);
    } catch (const InputError& e) {
        throw InputError(ctx + ": " + e.what());
    } catch (const SolverError& e) {
        throw SolverError(ctx + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + ": " + e.what());
    } catch (const std::exception& e) {
        throw SolverError(ctx + ": " + e.what());
    }
}

std::string dataset_source(const ExperimentConfig& cfg) {
    if (!cfg.generator.empty()) return "generator:" + cfg.generator;
    std::string s;
    for (const auto& p : cfg.view_paths) {
        if (!s.empty()) s += ";";
        s += p.string();
    }
    return s;
}

void write_trace_csv(const fs::path& path, const RunOutput& run) {
    std::ostringstream os;
    const std::size_t v = run.q_trace.empty() ? 0 : static_cast<std::size_t>(run.q_trace[0].size());
    os << "iteration,objective";
    for (std::size_t a = 0; a < v; ++a) os << ",q_" << a;
    for (std::size_t a = 0; a < v; ++a) os << ",beta_" << a;
    os << "\n";
    for (std::size_t t = 0; t < run.obj_trace.size(); ++t) {
        os << t << "," << fmt_full(run.obj_trace[t]);
        for (std::size_t a = 0; a < v; ++a)
            os << "," << fmt_full(run.q_trace[t](static_cast<Eigen::Index>(a)));
        for (std::size_t a = 0; a < v; ++a)
            os << "," << fmt_full(run.beta_trace[t](static_cast<Eigen::Index>(a)));
        os << "\n";
    }
    atomic_write(path, os.str());
}

void write_assignments_csv(const fs::path& path, const RunOutput& run) {
    std::ostringstream os;
    os << "sample,cluster\n";
    for (std::size_t j = 0; j < run.assignments.size(); ++j)
        os << j << "," << run.assignments[j] << "\n";
    atomic_write(path, os.str());
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size();
    return m % 2 == 1 ? xs[m / 2] : 0.5 * (xs[m / 2 - 1] + xs[m / 2]);
}

} // namespace

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

std::string method_name(Method m) {
    switch (m) {
    case Method::KernelMvnmf: return "kernel_mvnmf";
    case Method::SingleView: return "sv";
    case Method::Cnmf: return "cnmf";
    case Method::Mnmf: return "mnmf";
    case Method::Awmnmf: return "awmnmf";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "kernel_mvnmf") return Method::KernelMvnmf;
    if (name == "sv") return Method::SingleView;
    if (name == "cnmf") return Method::Cnmf;
    if (name == "mnmf") return Method::Mnmf;
    if (name == "awmnmf") return Method::Awmnmf;
    throw InputError("unknown method '" + name +
                     "' (expected kernel_mvnmf, sv, cnmf, mnmf or awmnmf)");
}

void ExperimentConfig::validate() const {
    const bool has_files = !view_paths.empty();
    const bool has_gen = !generator.empty();
    if (has_files == has_gen)
        throw InputError("config: give either view files ('view') or a 'generator', not both");
    if (has_gen && generator != "blobs" && generator != "rings")
        throw InputError("config: generator must be 'blobs' or 'rings'");
    if (k < 2) throw InputError("config: k must be >= 2");
    if (gamma < 0.0) throw InputError("config: gamma must be >= 0");
    for (double l : lambda)
        if (!(l > 0.0)) throw InputError("config: lambda entries must be > 0");
    for (double t : theta)
        if (t < 0.0) throw InputError("config: theta entries must be >= 0");
    if (max_iter < 1 || restarts < 1 || inner_pgd_steps < 1)
        throw InputError("config: max_iter, restarts and inner_pgd_steps must be >= 1");
    if (!(rel_tol > 0.0)) throw InputError("config: rel_tol must be > 0");
    if (n_seeds && *n_seeds < 1) throw InputError("config: n_seeds must be >= 1");
    if (scale != "auto" && scale != "minmax" && scale != "none")
        throw InputError("config: scale must be auto, minmax or none");
    if (scale == "none" && method_is_baseline(method))
        throw InputError("config: NMF baselines require nonnegative input; scale=none is only "
                         "valid for method kernel_mvnmf");
    if (method == Method::SingleView && !view_index)
        throw InputError("config: method 'sv' requires 'view_index'");
    if (poly_d < 1) throw InputError("config: poly_d must be >= 1");
    if (poly_c < 0.0) throw InputError("config: poly_c must be >= 0");
    if (gaussian_sigma && !(*gaussian_sigma > 0.0))
        throw InputError("config: gaussian_sigma must be > 0 or 'auto'");
    if (graph_sigma && !(*graph_sigma > 0.0))
        throw InputError("config: graph_sigma must be > 0 or 'auto'");
    for (const auto& name : kernel)
        if (name != "linear" && name != "polynomial" && name != "gaussian")
            throw InputError("config: unknown kernel '" + name + "'");
    const bool any_gaussian =
        std::any_of(kernel.begin(), kernel.end(), [](const auto& s) { return s == "gaussian"; });
    const bool any_poly =
        std::any_of(kernel.begin(), kernel.end(), [](const auto& s) { return s == "polynomial"; });
    if (!grid_sigma.empty() && !any_gaussian)
        throw InputError("config: grid_sigma needs at least one gaussian kernel view");
    if (!grid_degree.empty() && !any_poly)
        throw InputError("config: grid_degree needs at least one polynomial kernel view");
    for (double s : grid_sigma)
        if (!(s > 0.0)) throw InputError("config: grid_sigma entries must be > 0");
    for (int d : grid_degree)
        if (d < 1) throw InputError("config: grid_degree entries must be >= 1");
    for (double l : grid_lambda)
        if (!(l > 0.0)) throw InputError("config: grid_lambda entries must be > 0");
    for (double t : grid_theta)
        if (t < 0.0) throw InputError("config: grid_theta entries must be >= 0");
    for (double g : grid_gamma)
        if (g < 0.0) throw InputError("config: grid_gamma entries must be >= 0");
    if (has_gen) {
        if (gen_views < 1 || gen_n < 1) throw InputError("config: gen_views and gen_n must be >= 1");
        if (generator == "blobs" && gen_n < 2 * gen_k)
            throw InputError("config: blobs need gen_n >= 2 * gen_k");
        if (generator == "rings" && (gen_n % 2 != 0 || gen_n < 8))
            throw InputError("config: rings need even gen_n >= 8");
    }
}

ExperimentConfig parse_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());

    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim_copy(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'key = value'");
        const std::string key = trim_copy(stripped.substr(0, eq));
        const std::string value = trim_copy(stripped.substr(eq + 1));
        if (key.empty())
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty key");

        if (key == "view") cfg.view_paths.emplace_back(value);
        else if (key == "labels") cfg.labels_path = value;
        else if (key == "generator") cfg.generator = value;
        else if (key == "gen_views") cfg.gen_views = static_cast<int>(parse_integer(key, value));
        else if (key == "gen_k") cfg.gen_k = static_cast<int>(parse_integer(key, value));
        else if (key == "gen_n") cfg.gen_n = static_cast<int>(parse_integer(key, value));
        else if (key == "gen_dims") cfg.gen_dims = parse_int_list(key, value);
        else if (key == "gen_spread") cfg.gen_spread = parse_real(key, value);
        else if (key == "gen_noise") cfg.gen_noise = parse_real(key, value);
        else if (key == "method") cfg.method = parse_method(value);
        else if (key == "view_index") cfg.view_index = static_cast<int>(parse_integer(key, value));
        else if (key == "k") cfg.k = static_cast<int>(parse_integer(key, value));
        else if (key == "lambda") cfg.lambda = parse_real_list(key, value);
        else if (key == "theta") cfg.theta = parse_real_list(key, value);
        else if (key == "gamma") cfg.gamma = parse_real(key, value);
        else if (key == "kernel") cfg.kernel = split_list(value);
        else if (key == "poly_c") cfg.poly_c = parse_real(key, value);
        else if (key == "poly_d") cfg.poly_d = static_cast<int>(parse_integer(key, value));
        else if (key == "gaussian_sigma")
            cfg.gaussian_sigma = value == "auto" ? std::nullopt
                                                 : std::optional<double>(parse_real(key, value));
        else if (key == "graph_sigma")
            cfg.graph_sigma = value == "auto" ? std::nullopt
                                              : std::optional<double>(parse_real(key, value));
        else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_integer(key, value));
        else if (key == "rel_tol") cfg.rel_tol = parse_real(key, value);
        else if (key == "inner_pgd_steps")
            cfg.inner_pgd_steps = static_cast<int>(parse_integer(key, value));
        else if (key == "restarts") cfg.restarts = static_cast<int>(parse_integer(key, value));
        else if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "n_seeds") cfg.n_seeds = static_cast<int>(parse_integer(key, value));
        else if (key == "scale") cfg.scale = value;
        else if (key == "grid_lambda") cfg.grid_lambda = parse_real_list(key, value);
        else if (key == "grid_theta") cfg.grid_theta = parse_real_list(key, value);
        else if (key == "grid_gamma") cfg.grid_gamma = parse_real_list(key, value);
        else if (key == "grid_sigma") cfg.grid_sigma = parse_real_list(key, value);
        else if (key == "grid_degree") cfg.grid_degree = parse_int_list(key, value);
        else
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
    }
    for (const auto& name : cfg.kernel)
        if (name.empty()) throw InputError("config key 'kernel': empty kernel name");
    cfg.validate();
    return cfg;
}

MultiViewDataset materialize_dataset(const ExperimentConfig& config) {
    if (!config.generator.empty()) {
        if (config.generator == "blobs")
            return make_blobs(config.gen_views, config.gen_k, config.gen_n, config.gen_dims,
                              config.gen_spread, config.seed);
        return make_rings(config.gen_views, config.gen_n, config.gen_noise, config.seed);
    }
    return load_dataset(config.view_paths, config.labels_path);
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& config) {
    auto reals = [](const std::vector<double>& grid) {
        std::vector<std::optional<double>> out;
        if (grid.empty()) out.push_back(std::nullopt);
        else
            for (double g : grid) out.emplace_back(g);
        return out;
    };
    std::vector<std::optional<int>> degrees;
    if (config.grid_degree.empty()) degrees.push_back(std::nullopt);
    else
        for (int d : config.grid_degree) degrees.emplace_back(d);

    std::vector<GridPoint> points;
    for (const auto& l : reals(config.grid_lambda))
        for (const auto& t : reals(config.grid_theta))
            for (const auto& g : reals(config.grid_gamma))
                for (const auto& s : reals(config.grid_sigma))
                    for (const auto& d : degrees) {
                        GridPoint gp;
                        gp.index = points.size();
                        gp.lambda = l;
                        gp.theta = t;
                        gp.gamma = g;
                        gp.sigma = s;
                        gp.degree = d;
                        points.push_back(gp);
                    }
    return points;
}

std::size_t run_experiment(const ExperimentConfig& config) {
    config.validate();
    const MultiViewDataset raw = materialize_dataset(config);
    const bool baseline = method_is_baseline(config.method);
    const bool scale_kernel_input = config.scale == "minmax";
    const MultiViewDataset scaled =
        (baseline || scale_kernel_input) ? minmax_scale(raw) : MultiViewDataset{};
    const MultiViewDataset& kernel_input = scale_kernel_input ? scaled : raw;

    const std::vector<GridPoint> grid = expand_grid(config);
    const int n_seeds = config.n_seeds.value_or(1);

    fs::create_directories(config.out_dir);

    struct Cell {
        bool ok = false;
        RunOutput run;
    };
    const std::size_t total = grid.size() * static_cast<std::size_t>(n_seeds);
    std::vector<Cell> cells(total);
    const auto errors = parallel_for(total, [&](std::size_t idx) {
        const std::size_t g = idx / static_cast<std::size_t>(n_seeds);
        const int s = static_cast<int>(idx % static_cast<std::size_t>(n_seeds));
        const std::uint64_t eval_seed = derive_seed(config.seed, static_cast<std::uint64_t>(s));
        cells[idx].run = run_one(config, grid[g], config.method, kernel_input, scaled, eval_seed);
        cells[idx].ok = true;
    });

    // metrics.csv: one row per grid point that completed on every seed
    std::ostringstream os;
    os << "# method=" << method_name(config.method)
       << " source=" << dataset_source(config)
       << " scaling=" << (baseline ? "minmax" : (scale_kernel_input ? "minmax" : "none"))
       << " base_seed=" << config.seed << " n_seeds=" << n_seeds << "\n";
    os << "gridpoint,method,k,lambda,theta,gamma,kernel,sigma,degree,"
          "accuracy,nmi,rand_index,mirkin_index,"
          "accuracy_std,nmi_std,rand_index_std,mirkin_index_std,"
          "mean_objective,median_iterations\n";

    std::size_t written = 0;
    std::string kernel_names;
    for (std::size_t i = 0; i < config.kernel.size(); ++i)
        kernel_names += (i ? ";" : "") + config.kernel[i];
    const bool any_gaussian = kernel_names.find("gaussian") != std::string::npos;
    const bool any_poly = kernel_names.find("polynomial") != std::string::npos;
    const bool kernel_method = config.method == Method::KernelMvnmf;

    auto join_reals = [](const std::vector<double>& xs) {
        std::string s;
        for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + fmt_short(xs[i]);
        return s;
    };

    for (std::size_t g = 0; g < grid.size(); ++g) {
        bool complete = true;
        for (int s = 0; s < n_seeds; ++s)
            complete = complete && cells[g * n_seeds + static_cast<std::size_t>(s)].ok;
        if (!complete) continue;

        std::vector<double> acc, nm, ri, mi, obj, iters;
        for (int s = 0; s < n_seeds; ++s) {
            const RunOutput& r = cells[g * n_seeds + static_cast<std::size_t>(s)].run;
            if (r.metrics) {
                acc.push_back(r.metrics->accuracy);
                nm.push_back(r.metrics->nmi);
                ri.push_back(r.metrics->rand_index);
                mi.push_back(r.metrics->mirkin_index);
            }
            obj.push_back(r.objective);
            iters.push_back(static_cast<double>(r.iterations));
        }
        const GridPoint& gp = grid[g];
        os << gp.index << "," << method_name(config.method) << "," << config.k << ","
           << (gp.lambda ? fmt_short(*gp.lambda) : join_reals(config.lambda)) << ","
           << (gp.theta ? fmt_short(*gp.theta) : join_reals(config.theta)) << ","
           << fmt_short(gp.gamma.value_or(config.gamma)) << ","
           << (kernel_method ? kernel_names : "") << ",";
        if (kernel_method && any_gaussian) {
            if (gp.sigma) os << fmt_short(*gp.sigma);
            else if (config.gaussian_sigma) os << fmt_short(*config.gaussian_sigma);
            else os << "auto";
        }
        os << ",";
        if (kernel_method && any_poly) os << gp.degree.value_or(config.poly_d);
        os << ",";
        if (!acc.empty()) {
            os << fmt_full(mean_of(acc)) << "," << fmt_full(mean_of(nm)) << ","
               << fmt_full(mean_of(ri)) << "," << fmt_full(mean_of(mi)) << ","
               << fmt_full(std_of(acc)) << "," << fmt_full(std_of(nm)) << ","
               << fmt_full(std_of(ri)) << "," << fmt_full(std_of(mi));
        } else {
            os << ",,,,,,,";
        }
        os << "," << fmt_full(mean_of(obj)) << "," << fmt_short(median_of(iters)) << "\n";

        // trace and assignments for the first evaluation seed
        const RunOutput& first = cells[g * n_seeds].run;
        write_trace_csv(config.out_dir / ("trace_" + std::to_string(gp.index) + ".csv"), first);
        write_assignments_csv(
            config.out_dir / ("assignments_" + std::to_string(gp.index) + ".csv"), first);
        ++written;
    }
    atomic_write(config.out_dir / "metrics.csv", os.str());

    for (std::size_t idx = 0; idx < total; ++idx) {
        if (errors[idx]) {
            const std::size_t g = idx / static_cast<std::size_t>(n_seeds);
            rethrow_with_context(errors[idx],
                                 "grid point " + std::to_string(g) + ", seed index " +
                                     std::to_string(idx % static_cast<std::size_t>(n_seeds)));
        }
    }
    return written;
}

std::vector<std::pair<int, double>> feature_importance(const MultiViewDataset& dataset,
                                                       const FactorizationState& state,
                                                       const KernelSpec& kernel, int view_index) {
    if (view_index < 0 || view_index >= static_cast<int>(dataset.n_views()))
        throw InputError("feature_importance: view_index out of range");
    if (kernel.kind != KernelSpec::Kind::Linear)
        throw InputError("feature_importance: view " + std::to_string(view_index) + " uses a " +
                         kernel.name() + " kernel; the centroid matrix F = X P is only explicit "
                         "for the linear kernel (it lives in feature space otherwise)");
    const std::size_t a = static_cast<std::size_t>(view_index);
    if (state.P.size() <= a)
        throw InputError("feature_importance: state does not cover view " +
                         std::to_string(view_index));

    const Eigen::MatrixXd F = dataset.views[a].X * state.P[a]; // m x k
    std::vector<std::pair<int, double>> ranked;
    ranked.reserve(static_cast<std::size_t>(F.rows()));
    for (Eigen::Index j = 0; j < F.rows(); ++j)
        ranked.emplace_back(static_cast<int>(j), F.row(j).cwiseAbs().sum());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    return ranked;
}

void run_importance(const ExperimentConfig& config) {
    config.validate();
    if (!config.view_index)
        throw InputError("importance requires config key 'view_index'");
    const MultiViewDataset raw = materialize_dataset(config);
    const MultiViewDataset& input = config.scale == "minmax" ? minmax_scale(raw) : raw;

    GridPoint gp;
    const std::vector<KernelSpec> kernels = resolve_kernels(config, gp, input);

    SolverConfig sc;
    sc.k = config.k;
    sc.lambda = config.lambda;
    sc.theta = config.theta;
    sc.gamma = config.gamma;
    sc.kernels = kernels;
    sc.graph_sigma = config.graph_sigma;
    sc.max_iter = config.max_iter;
    sc.rel_tol = config.rel_tol;
    sc.inner_pgd_steps = config.inner_pgd_steps;
    sc.restarts = config.restarts;
    sc.seed = derive_seed(config.seed, 0);
    const FactorizationState state = fit(input, sc);

    const int a = *config.view_index;
    const auto ranked = feature_importance(input, state, kernels[static_cast<std::size_t>(a)], a);

    fs::create_directories(config.out_dir);
    std::ostringstream os;
    os << "rank,feature_index,importance\n";
    for (std::size_t r = 0; r < ranked.size(); ++r)
        os << r << "," << ranked[r].first << "," << fmt_full(ranked[r].second) << "\n";
    atomic_write(config.out_dir / ("importance_" + std::to_string(a) + ".csv"), os.str());
}

void compare_methods(const ExperimentConfig& config) {
    config.validate();
    const MultiViewDataset raw = materialize_dataset(config);
    if (!raw.labels) throw InputError("compare requires ground-truth labels");
    const MultiViewDataset scaled = minmax_scale(raw);
    const MultiViewDataset& kernel_input = config.scale == "minmax" ? scaled : raw;

    const int n_seeds = config.n_seeds.value_or(10);
    const std::vector<Method> methods = {Method::SingleView, Method::Cnmf, Method::Mnmf,
                                         Method::Awmnmf, Method::KernelMvnmf};
    const GridPoint gp; // scalar config values only

    struct Cell {
        MetricsReport metrics;
    };
    const std::size_t total = methods.size() * static_cast<std::size_t>(n_seeds);
    std::vector<Cell> cells(total);
    const auto errors = parallel_for(total, [&](std::size_t idx) {
        const std::size_t m = idx / static_cast<std::size_t>(n_seeds);
        const int s = static_cast<int>(idx % static_cast<std::size_t>(n_seeds));
        const std::uint64_t eval_seed = derive_seed(config.seed, static_cast<std::uint64_t>(s));
        const Method method = methods[m];
        if (method == Method::SingleView) {
            // run every view separately and average, the single-view protocol
            MetricsReport sum;
            for (int a = 0; a < static_cast<int>(raw.n_views()); ++a) {
                ExperimentConfig view_cfg = config;
                view_cfg.view_index = a;
                const RunOutput r =
                    run_one(view_cfg, gp, method, kernel_input, scaled, eval_seed);
                sum.accuracy += r.metrics->accuracy;
                sum.nmi += r.metrics->nmi;
                sum.rand_index += r.metrics->rand_index;
                sum.mirkin_index += r.metrics->mirkin_index;
            }
            const double v = static_cast<double>(raw.n_views());
            cells[idx].metrics = {sum.accuracy / v, sum.nmi / v, sum.rand_index / v,
                                  sum.mirkin_index / v, static_cast<std::size_t>(raw.n_samples())};
        } else {
            const RunOutput r = run_one(config, gp, method, kernel_input, scaled, eval_seed);
            cells[idx].metrics = *r.metrics;
        }
    });
    for (std::size_t idx = 0; idx < total; ++idx)
        if (errors[idx])
            rethrow_with_context(
                errors[idx],
                "method " + method_name(methods[idx / static_cast<std::size_t>(n_seeds)]) +
                    ", seed index " + std::to_string(idx % static_cast<std::size_t>(n_seeds)));

    auto mean_metric = [&](std::size_t m, auto field) {
        double s = 0.0;
        for (int i = 0; i < n_seeds; ++i)
            s += cells[m * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(i)]
                     .metrics.*field;
        return s / static_cast<double>(n_seeds);
    };

    fs::create_directories(config.out_dir);
    std::ostringstream os;
    os << "# source=" << dataset_source(config) << " base_seed=" << config.seed
       << " n_seeds=" << n_seeds << " values=percent\n";
    os << "metric";
    for (const Method m : methods) os << "," << method_name(m);
    os << "\n";
    const std::pair<const char*, double MetricsReport::*> rows[] = {
        {"accuracy", &MetricsReport::accuracy},
        {"nmi", &MetricsReport::nmi},
        {"rand_index", &MetricsReport::rand_index},
        {"mirkin_index", &MetricsReport::mirkin_index},
    };
    for (const auto& [label, field] : rows) {
        os << label;
        for (std::size_t m = 0; m < methods.size(); ++m) os << "," << fmt_pct(mean_metric(m, field));
        os << "\n";
    }
    atomic_write(config.out_dir / "comparison.csv", os.str());
}

void run_generate(const ExperimentConfig& config) {
    config.validate();
    if (config.generator.empty())
        throw InputError("gen requires a 'generator' config (blobs or rings)");
    const MultiViewDataset ds = materialize_dataset(config);
    fs::create_directories(config.out_dir);
    for (const auto& view : ds.views) {
        const fs::path tmp = config.out_dir / (view.name + ".csv.tmp");
        save_view_csv(view.X, tmp);
        fs::rename(tmp, config.out_dir / (view.name + ".csv"));
    }
    if (ds.labels) {
        const fs::path tmp = config.out_dir / "labels.csv.tmp";
        save_labels(*ds.labels, tmp);
        fs::rename(tmp, config.out_dir / "labels.csv");
    }
}

} // namespace mvnmf
