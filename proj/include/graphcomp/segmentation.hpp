#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "graphcomp/bytes.hpp"
#include "graphcomp/grid.hpp"

namespace graphcomp {

struct SegParams {
    double scale = 10.0;
    double sigma = 1.0;
    std::size_t min_size = 1;

    void validate() const {
        require(scale > 0 && std::isfinite(scale), ErrorKind::config, "segmentation scale must be positive");
        require(sigma >= 0 && std::isfinite(sigma), ErrorKind::config, "segmentation sigma must be >= 0");
        require(min_size >= 1, ErrorKind::config, "segmentation min_size must be >= 1");
    }
};

/// Dense labelling of an M x N plane into 4-connected regions 0..R-1.
struct SegmentationMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> labels;
    std::size_t region_count = 0;
    std::vector<std::size_t> region_sizes;

    bool operator==(const SegmentationMap&) const = default;
};

namespace detail {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Returns the surviving root.
    std::size_t unite(std::size_t a, std::size_t b) {
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        if (rank_[a] == rank_[b]) ++rank_[a];
        return a;
    }

    std::size_t size(std::size_t root) const { return size_[root]; }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::vector<std::uint8_t> rank_;
};

/// Separable Gaussian blur with mirrored borders; kernel radius ceil(4 sigma).
template <std::floating_point S>
std::vector<double> gaussian_smooth(const Field2D<S>& field, double sigma) {
    const std::size_t m = field.rows, n = field.cols;
    std::vector<double> src(field.values.begin(), field.values.end());
    if (sigma <= 0) return src;

    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (auto& k : kernel) k /= total;

    auto mirror = [](long i, long len) {
        if (len == 1) return 0L;
        const long period = 2 * len;
        i %= period;
        if (i < 0) i += period;
        return i < len ? i : period - 1 - i;
    };

    std::vector<double> tmp(m * n), out(m * n);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * src[r * n + mirror(static_cast<long>(c) + k, static_cast<long>(n))];
            tmp[r * n + c] = acc;
        }
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp[mirror(static_cast<long>(r) + k, static_cast<long>(m)) * n + c];
            out[r * n + c] = acc;
        }
    return out;
}

}  // namespace detail

/// Graph-based segmentation on the 4-connected pixel grid.
///
/// Edges carry |v_i - v_j| of the smoothed field and are processed in
/// (weight, edge index) order. Components merge when the edge weight does not
/// exceed either side's internal difference plus scale/|C|. A second pass
/// absorbs components smaller than min_size across their cheapest edge.
template <std::floating_point S>
SegmentationMap felzenszwalb(const Field2D<S>& field, const SegParams& params) {
    params.validate();
    const std::size_t m = field.rows, n = field.cols, count = m * n;
    require(count == field.values.size() && count > 0, ErrorKind::dimension, "field shape mismatch");

    const auto smooth = detail::gaussian_smooth(field, params.sigma);

    struct Edge {
        double w;
        std::uint32_t a, b;
    };
    std::vector<Edge> edges;
    edges.reserve(2 * count);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t i = r * n + c;
            if (c + 1 < n)
                edges.push_back({std::abs(smooth[i] - smooth[i + 1]), static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(i + 1)});
            if (r + 1 < m)
                edges.push_back({std::abs(smooth[i] - smooth[i + n]), static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(i + n)});
        }
    // Generation order is the tie-break, which makes this a total order.
    std::vector<std::uint32_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return edges[x].w < edges[y].w; });

    detail::DisjointSet sets(count);
    std::vector<double> threshold(count, params.scale);
    for (auto idx : order) {
        const auto& e = edges[idx];
        auto a = sets.find(e.a), b = sets.find(e.b);
        if (a == b) continue;
        if (e.w <= threshold[a] && e.w <= threshold[b]) {
            const auto root = sets.unite(a, b);
            threshold[root] = e.w + params.scale / static_cast<double>(sets.size(root));
        }
    }
    for (auto idx : order) {
        const auto& e = edges[idx];
        auto a = sets.find(e.a), b = sets.find(e.b);
        if (a != b && (sets.size(a) < params.min_size || sets.size(b) < params.min_size)) sets.unite(a, b);
    }

    SegmentationMap map;
    map.rows = m;
    map.cols = n;
    map.labels.resize(count);
    std::vector<std::uint32_t> relabel(count, UINT32_MAX);
    for (std::size_t i = 0; i < count; ++i) {
        const auto root = sets.find(i);
        if (relabel[root] == UINT32_MAX) {
            relabel[root] = static_cast<std::uint32_t>(map.region_count++);
            map.region_sizes.push_back(0);
        }
        map.labels[i] = relabel[root];
        ++map.region_sizes[relabel[root]];
    }
    return map;
}

/// Row-major run-length encoding as (label, run) varint pairs, prefixed by the run count.
inline Bytes serialize_labels(const SegmentationMap& map) {
    ByteWriter w;
    std::vector<std::pair<std::uint32_t, std::uint64_t>> runs;
    for (std::size_t i = 0; i < map.labels.size();) {
        std::size_t j = i + 1;
        while (j < map.labels.size() && map.labels[j] == map.labels[i]) ++j;
        runs.emplace_back(map.labels[i], j - i);
        i = j;
    }
    w.put_varint(runs.size());
    for (auto [label, run] : runs) {
        w.put_varint(label);
        w.put_varint(run);
    }
    return w.take();
}

/// Inverse of serialize_labels; rebuilds region sizes and checks label density.
inline SegmentationMap deserialize_labels(ByteReader& in, std::size_t rows, std::size_t cols) {
    SegmentationMap map;
    map.rows = rows;
    map.cols = cols;
    map.labels.reserve(rows * cols);
    const auto runs = in.checked_size(in.get_varint(), 2);
    for (std::size_t k = 0; k < runs; ++k) {
        const auto label = in.get_varint();
        const auto run = in.get_varint();
        require(label < rows * cols && run >= 1 && run <= rows * cols - map.labels.size(), ErrorKind::format,
                "corrupt label run");
        map.labels.insert(map.labels.end(), run, static_cast<std::uint32_t>(label));
        if (label >= map.region_sizes.size()) map.region_sizes.resize(label + 1, 0);
        map.region_sizes[label] += run;
    }
    require(map.labels.size() == rows * cols, ErrorKind::format, "label map does not cover the plane");
    map.region_count = map.region_sizes.size();
    for (auto s : map.region_sizes) require(s > 0, ErrorKind::format, "label map is not densely numbered");
    return map;
}

inline SegmentationMap deserialize_labels(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols) {
    ByteReader in(bytes);
    auto map = deserialize_labels(in, rows, cols);
    require(in.at_end(), ErrorKind::format, "trailing bytes after label map");
    return map;
}

template <std::floating_point S>
std::vector<double> region_means(std::span<const S> values, const SegmentationMap& map) {
    require(values.size() == map.labels.size(), ErrorKind::dimension, "field and label map differ in size");
    std::vector<double> sums(map.region_count, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) sums[map.labels[i]] += static_cast<double>(values[i]);
    for (std::size_t r = 0; r < map.region_count; ++r) sums[r] /= static_cast<double>(map.region_sizes[r]);
    return sums;
}

template <std::floating_point S>
std::vector<double> region_means(const Field2D<S>& field, const SegmentationMap& map) {
    require(field.rows == map.rows && field.cols == map.cols, ErrorKind::dimension,
            "field and label map differ in shape");
    return region_means<S>(std::span<const S>(field.values), map);
}

}  // namespace graphcomp
