#pragma once

#include "mvnmf/baselines.hpp"
#include "mvnmf/dataset.hpp"
#include "mvnmf/metrics.hpp"
#include "mvnmf/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvnmf {

enum class Method { KernelMvnmf, SingleView, Cnmf, Mnmf, Awmnmf };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// One experiment description: a data source, a method, model settings and
// optional hyperparameter grids. Parsed from a flat key = value config file;
// unknown keys are errors.
struct ExperimentConfig {
    // data source: explicit view files, or a generator
    std::vector<std::filesystem::path> view_paths;
    std::optional<std::filesystem::path> labels_path;
    std::string generator;       // "", "blobs" or "rings"
    int gen_views = 2;
    int gen_k = 3;
    int gen_n = 60;
    std::vector<int> gen_dims{5};
    double gen_spread = 0.1;
    double gen_noise = 0.05;

    Method method = Method::KernelMvnmf;
    std::optional<int> view_index; // required when method = sv

    int k = 2;
    std::vector<double> lambda{1.0};
    std::vector<double> theta{1.0};
    double gamma = 2.0;
    std::vector<std::string> kernel{"linear"};  // per view, or one broadcast
    double poly_c = 1.0;
    int poly_d = 2;
    std::optional<double> gaussian_sigma;       // nullopt = median heuristic per view
    std::optional<double> graph_sigma;          // nullopt = median heuristic per view
    int max_iter = 100;
    double rel_tol = 1e-6;
    int inner_pgd_steps = 1;
    int restarts = 10;
    std::uint64_t seed = 0;
    std::optional<int> n_seeds;                 // default 1 for run, 10 for compare
    std::string scale = "auto";                 // auto | minmax | none

    std::vector<double> grid_lambda;
    std::vector<double> grid_theta;
    std::vector<double> grid_gamma;
    std::vector<double> grid_sigma;             // gaussian kernels only
    std::vector<int> grid_degree;               // polynomial kernels only

    std::filesystem::path out_dir = "out";

    void validate() const;
};

ExperimentConfig parse_experiment_config(const std::filesystem::path& path);

// Loads the view files or runs the configured generator.
MultiViewDataset materialize_dataset(const ExperimentConfig& config);

// One hyperparameter combination of the grid; unset fields fall back to the
// scalar config values.
struct GridPoint {
    std::size_t index = 0;
    std::optional<double> lambda;
    std::optional<double> theta;
    std::optional<double> gamma;
    std::optional<double> sigma;
    std::optional<int> degree;
};

std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

// Fits the configured method at every grid point (n_seeds evaluation seeds
// each) and writes metrics.csv, trace_<gridpoint>.csv and
// assignments_<gridpoint>.csv into config.out_dir. Rows for completed grid
// points are preserved when a later grid point fails. Returns the number of
// grid points written.
std::size_t run_experiment(const ExperimentConfig& config);

// Feature importances for a linear-kernel view: F = X P, importance of
// feature j is the L1 norm of row j of F. Sorted by descending importance,
// ties by ascending feature index.
std::vector<std::pair<int, double>> feature_importance(const MultiViewDataset& dataset,
                                                       const FactorizationState& state,
                                                       const KernelSpec& kernel, int view_index);

// Fits one solver run per config and writes importance_<view>.csv.
void run_importance(const ExperimentConfig& config);

// Runs sv (averaged over views), cnmf, mnmf, awmnmf and kernel_mvnmf on the
// same dataset and seed set and writes comparison.csv with mean metrics as
// percentages (2 decimals), one column per method.
void compare_methods(const ExperimentConfig& config);

// Emits the configured generator's views and labels as CSV files.
void run_generate(const ExperimentConfig& config);

} // namespace mvnmf
