#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvnmf {

// v feature matrices over the same n samples. Each view is m_a x n with
// samples as columns. Labels, when present, are contiguous ids from 0.
struct MultiViewDataset {
    struct View {
        std::string name;
        Eigen::MatrixXd X;
    };

    std::vector<View> views;
    std::optional<std::vector<int>> labels;

    Eigen::Index n_samples() const { return views.empty() ? 0 : views.front().X.cols(); }
    std::size_t n_views() const { return views.size(); }

    // Throws InputError if any invariant is broken.
    void validate() const;
};

// CSV ingestion: one row per feature, one column per sample, '.' decimal,
// optional header row auto-detected by a non-numeric first cell. The labels
// file holds one integer per line.
MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::optional<std::filesystem::path>& labels_path = std::nullopt);

// Writers matching the load_dataset format; values carry 17 significant
// digits so load(save(X)) round-trips bit-exactly.
void save_view_csv(const Eigen::MatrixXd& X, const std::filesystem::path& path);
void save_labels(const std::vector<int>& labels, const std::filesystem::path& path);

// Per-feature (x - min) / (max - min) into [0,1]; constant rows map to 0.
// Returns a scaled copy, the input is untouched.
MultiViewDataset minmax_scale(const MultiViewDataset& dataset);

// Balanced Gaussian blobs shared across v views; centroids are rescaled so
// their pairwise distance is at least 10 * spread. dims holds one entry per
// view, or a single entry broadcast to all views.
MultiViewDataset make_blobs(int v, int k, int n, const std::vector<int>& dims, double spread,
                            std::uint64_t seed);

// Two concentric circles (radii 1 and 3) per view in 2 dimensions with
// radial Gaussian noise and shared binary labels. n must be even and >= 8.
MultiViewDataset make_rings(int v, int n, double noise, std::uint64_t seed);

} // namespace mvnmf
