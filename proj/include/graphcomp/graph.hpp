#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphcomp/meta_select.hpp"
#include "graphcomp/segmentation.hpp"

namespace graphcomp {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// D^-1/2 (A + I) D^-1/2 as a coordinate list sorted by (row, col).
struct NormalizedAdjacency {
    std::size_t node_count = 0;
    std::vector<std::uint32_t> row;
    std::vector<std::uint32_t> col;
    std::vector<double> value;

    std::size_t nnz() const { return value.size(); }
};

struct RegionGraph {
    std::size_t node_count = 0;
    std::vector<Edge> edges;  // u < v, sorted, unique
    NormalizedAdjacency norm_adj;
};

/// Region adjacency from 4-neighbour pixel pairs with different labels.
inline std::vector<Edge> build_edges(const SegmentationMap& map) {
    std::vector<Edge> edges;
    const std::size_t m = map.rows, n = map.cols;
    auto add = [&](std::uint32_t a, std::uint32_t b) {
        if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
    };
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const auto l = map.labels[r * n + c];
            if (c + 1 < n) add(l, map.labels[r * n + c + 1]);
            if (r + 1 < m) add(l, map.labels[(r + 1) * n + c]);
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

inline NormalizedAdjacency normalize_adjacency(std::size_t node_count, const std::vector<Edge>& edges) {
    std::vector<std::vector<std::uint32_t>> nbrs(node_count);
    for (auto [u, v] : edges) {
        require(u < node_count && v < node_count && u != v, ErrorKind::dimension, "edge outside the node set");
        nbrs[u].push_back(v);
        nbrs[v].push_back(u);
    }
    std::vector<double> inv_sqrt_deg(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
        nbrs[i].push_back(static_cast<std::uint32_t>(i));
        std::sort(nbrs[i].begin(), nbrs[i].end());
        inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(nbrs[i].size()));
    }
    NormalizedAdjacency adj;
    adj.node_count = node_count;
    for (std::size_t i = 0; i < node_count; ++i)
        for (auto j : nbrs[i]) {
            adj.row.push_back(static_cast<std::uint32_t>(i));
            adj.col.push_back(j);
            // Product order is fixed by (min, max) so mirrored entries are bit-identical.
            const auto lo = std::min<std::size_t>(i, j), hi = std::max<std::size_t>(i, j);
            adj.value.push_back(inv_sqrt_deg[lo] * inv_sqrt_deg[hi]);
        }
    return adj;
}

inline RegionGraph build_graph(const SegmentationMap& map) {
    RegionGraph g;
    g.node_count = map.region_count;
    g.edges = build_edges(map);
    g.norm_adj = normalize_adjacency(g.node_count, g.edges);
    return g;
}

/// out = Ã x
template <class S>
void spmm(const NormalizedAdjacency& adj, const Mat<S>& x, Mat<S>& out) {
    require(static_cast<std::size_t>(x.rows()) == adj.node_count, ErrorKind::dimension,
            "adjacency and feature rows differ");
    out.setZero(x.rows(), x.cols());
    for (std::size_t k = 0; k < adj.nnz(); ++k) out.row(adj.row[k]) += static_cast<S>(adj.value[k]) * x.row(adj.col[k]);
}

/// Dense 0/1 adjacency without self-loops.
template <class S>
Mat<S> dense_adjacency(std::size_t node_count, const std::vector<Edge>& edges) {
    Mat<S> a = Mat<S>::Zero(node_count, node_count);
    for (auto [u, v] : edges) a(u, v) = a(v, u) = S(1);
    return a;
}

/// Affine map applied to a group's features before they enter the autoencoder.
struct Standardization {
    double mean = 0.0;
    double scale = 1.0;

    double apply(double x) const { return (x - mean) / scale; }
    double invert(double z) const { return z * scale + mean; }
    bool operator==(const Standardization&) const = default;
};

/// Standardized region-mean features (d = 1) for every timestamp of one group.
struct GroupFeatures {
    Standardization standardization;
    std::vector<std::vector<double>> per_timestamp;  // [t - group.start][region]
};

/// Standardizes to zero mean and unit variance over all of a group's features.
inline Standardization fit_standardization(const std::vector<std::vector<double>>& raw) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& f : raw)
        for (double x : f) {
            sum += x;
            ++n;
        }
    Standardization s;
    if (n == 0) return s;
    s.mean = sum / static_cast<double>(n);
    double sq = 0;
    for (const auto& f : raw)
        for (double x : f) sq += (x - s.mean) * (x - s.mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));
    s.scale = sd > 0 && std::isfinite(sd) ? sd : 1.0;
    return s;
}

template <std::floating_point S>
GroupFeatures build_group_features(const TemporalGrid<S>& grid, TimeRange group, const SegmentationMap& map) {
    require(map.rows == grid.rows() && map.cols == grid.cols(), ErrorKind::dimension,
            "segmentation does not match the grid plane");
    require(group.end < grid.timestamps(), ErrorKind::dimension, "group outside the grid");
    GroupFeatures out;
    for (std::size_t t = group.start; t <= group.end; ++t) out.per_timestamp.push_back(region_means(grid.frame(t), map));
    out.standardization = fit_standardization(out.per_timestamp);
    for (auto& f : out.per_timestamp)
        for (double& x : f) x = out.standardization.apply(x);
    return out;
}

/// One GroupFeatures per plan group; maps[i] is the segmentation of plan.groups[i].
template <std::floating_point S>
std::vector<GroupFeatures> build_features(const TemporalGrid<S>& grid, const MetaPlan& plan,
                                          const std::vector<SegmentationMap>& maps) {
    require(maps.size() == plan.groups.size(), ErrorKind::dimension, "one segmentation per group is required");
    std::vector<GroupFeatures> out;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) out.push_back(build_group_features(grid, plan.groups[g], maps[g]));
    return out;
}

}  // namespace graphcomp
