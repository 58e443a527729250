#include "mvnmf/dataset.hpp"

#include "mvnmf/errors.hpp"
#include "mvnmf/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mvnmf {

namespace {

std::string loc(const std::filesystem::path& file, std::size_t line, std::size_t col) {
    return file.string() + ":" + std::to_string(line) + ":" + std::to_string(col);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view cell, double& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

Eigen::MatrixXd load_view_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open view file: " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first_content_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (!line.empty() && line.front() == '#') continue;
        const auto cells = split_cells(line);

        if (first_content_row) {
            double probe = 0.0;
            if (!parse_double(cells.front(), probe)) {
                first_content_row = false; // header row, skip it
                continue;
            }
        }
        first_content_row = false;

        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v))
                throw InputError("parse failure at " + loc(path, line_no, c + 1) + ": '" +
                                 std::string(trim(cells[c])) + "' is not a number");
            if (!std::isfinite(v))
                throw InputError("non-finite value at " + loc(path, line_no, c + 1));
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError("ragged row at " + loc(path, line_no, 1) + ": expected " +
                             std::to_string(rows.front().size()) + " columns, found " +
                             std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("view file has no data rows: " + path.string());

    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return X;
}

std::vector<int> load_labels_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path.string());
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto cell = trim(line);
        if (cell.empty() || cell.front() == '#') continue;
        int v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size())
            throw InputError("parse failure at " + loc(path, line_no, 1) + ": '" +
                             std::string(cell) + "' is not an integer label");
        labels.push_back(v);
    }
    return labels;
}

void check_labels(const std::vector<int>& labels, Eigen::Index n) {
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw InputError("labels length " + std::to_string(labels.size()) +
                         " does not match sample count " + std::to_string(n));
    std::set<int> ids(labels.begin(), labels.end());
    if (!ids.empty()) {
        if (*ids.begin() < 0) throw InputError("labels must be nonnegative");
        const int top = *ids.rbegin();
        if (static_cast<int>(ids.size()) != top + 1)
            throw InputError("labels must use contiguous ids starting at 0");
    }
}

} // namespace

void MultiViewDataset::validate() const {
    if (views.empty()) throw InputError("dataset has no views");
    const Eigen::Index n = views.front().X.cols();
    if (n < 1) throw InputError("dataset has no samples");
    for (const auto& v : views) {
        if (v.X.cols() != n)
            throw InputError("sample-count mismatch: view '" + views.front().name + "' has " +
                             std::to_string(n) + " columns, view '" + v.name + "' has " +
                             std::to_string(v.X.cols()));
        if (v.X.rows() < 1) throw InputError("view '" + v.name + "' has no features");
        if (!v.X.allFinite())
            throw InputError("view '" + v.name + "' contains non-finite entries");
    }
    if (labels) check_labels(*labels, n);
}

MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::optional<std::filesystem::path>& labels_path) {
    if (view_paths.empty()) throw InputError("load_dataset: no view files given");
    MultiViewDataset ds;
    for (const auto& p : view_paths) {
        MultiViewDataset::View v;
        v.name = p.stem().string();
        v.X = load_view_csv(p);
        ds.views.push_back(std::move(v));
    }
    if (labels_path) ds.labels = load_labels_file(*labels_path);
    ds.validate();
    return ds;
}

void save_view_csv(const Eigen::MatrixXd& X, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write view file: " + path.string());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        out << (j ? "," : "") << "sample_" << j;
    out << "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", X(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write labels file: " + path.string());
    for (const int l : labels) out << l << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

MultiViewDataset minmax_scale(const MultiViewDataset& dataset) {
    MultiViewDataset out = dataset;
    for (auto& view : out.views) {
        for (Eigen::Index i = 0; i < view.X.rows(); ++i) {
            const double lo = view.X.row(i).minCoeff();
            const double hi = view.X.row(i).maxCoeff();
            if (hi > lo)
                view.X.row(i) = (view.X.row(i).array() - lo) / (hi - lo);
            else
                view.X.row(i).setZero();
        }
    }
    return out;
}

MultiViewDataset make_blobs(int v, int k, int n, const std::vector<int>& dims, double spread,
                            std::uint64_t seed) {
    if (v < 1 || k < 1) throw InputError("make_blobs: v and k must be >= 1");
    if (n < 2 * k) throw InputError("make_blobs: need n >= 2k samples");
    if (spread < 0.0) throw InputError("make_blobs: spread must be >= 0");
    if (dims.empty() || (dims.size() != 1 && dims.size() != static_cast<std::size_t>(v)))
        throw InputError("make_blobs: dims must have 1 or v entries");
    for (int d : dims)
        if (d < 1) throw InputError("make_blobs: dims must be >= 1");

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % k;

    MultiViewDataset ds;
    ds.labels = labels;
    for (int a = 0; a < v; ++a) {
        const int m = dims.size() == 1 ? dims[0] : dims[static_cast<std::size_t>(a)];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(a)));

        Eigen::MatrixXd centroids = normal_matrix(m, k, rng);
        if (k > 1) {
            double dmin = std::numeric_limits<double>::infinity();
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j)
                    dmin = std::min(dmin, (centroids.col(i) - centroids.col(j)).norm());
            const double target = 10.0 * spread;
            if (dmin <= 0.0) throw SolverError("make_blobs: degenerate centroid draw");
            if (dmin < target) centroids *= target / dmin;
        }

        MultiViewDataset::View view;
        view.name = "view" + std::to_string(a);
        view.X.resize(m, n);
        for (int i = 0; i < n; ++i) {
            view.X.col(i) = centroids.col(labels[static_cast<std::size_t>(i)]);
            for (int r = 0; r < m; ++r) view.X(r, i) += spread * rng.normal();
        }
        ds.views.push_back(std::move(view));
    }
    ds.validate();
    return ds;
}

MultiViewDataset make_rings(int v, int n, double noise, std::uint64_t seed) {
    if (v < 1) throw InputError("make_rings: v must be >= 1");
    if (n < 8 || n % 2 != 0) throw InputError("make_rings: n must be even and >= 8");
    if (noise < 0.0) throw InputError("make_rings: noise must be >= 0");

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % 2;

    const double two_pi = 6.283185307179586476925286766559;
    MultiViewDataset ds;
    ds.labels = labels;
    for (int a = 0; a < v; ++a) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(a)));
        MultiViewDataset::View view;
        view.name = "view" + std::to_string(a);
        view.X.resize(2, n);
        for (int i = 0; i < n; ++i) {
            const double base = labels[static_cast<std::size_t>(i)] == 0 ? 1.0 : 3.0;
            const double angle = two_pi * rng.uniform();
            const double radius = base + noise * rng.normal();
            view.X(0, i) = radius * std::cos(angle);
            view.X(1, i) = radius * std::sin(angle);
        }
        ds.views.push_back(std::move(view));
    }
    ds.validate();
    return ds;
}

} // namespace mvnmf
