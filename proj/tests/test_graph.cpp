#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "graphcomp/graph.hpp"
#include "graphcomp/meta_select.hpp"

using namespace graphcomp;

namespace {

SegmentationMap map_from(std::size_t m, std::size_t n, std::vector<std::uint32_t> labels) {
    SegmentationMap map;
    map.rows = m;
    map.cols = n;
    map.labels = std::move(labels);
    for (auto l : map.labels) map.region_count = std::max<std::size_t>(map.region_count, l + 1);
    map.region_sizes.assign(map.region_count, 0);
    for (auto l : map.labels) ++map.region_sizes[l];
    return map;
}

SegmentationMap random_map(std::uint64_t seed, std::size_t m, std::size_t n) {
    Rng rng(seed);
    Field2D<double> f(m, n, 0.0);
    for (auto& v : f.values) v = rng.uniform(0, 60);
    return felzenszwalb(f, SegParams{8.0, 0.0, 2});
}

double entry(const NormalizedAdjacency& a, std::uint32_t r, std::uint32_t c) {
    for (std::size_t k = 0; k < a.nnz(); ++k)
        if (a.row[k] == r && a.col[k] == c) return a.value[k];
    return 0.0;
}

}  // namespace

TEST(BuildGraph, SingleRegion) {
    const auto g = build_graph(map_from(3, 3, std::vector<std::uint32_t>(9, 0)));
    EXPECT_EQ(g.node_count, 1u);
    EXPECT_TRUE(g.edges.empty());
}

TEST(BuildGraph, TwoHalves) {
    const auto g = build_graph(map_from(2, 4, {0, 0, 1, 1, 0, 0, 1, 1}));
    EXPECT_EQ(g.node_count, 2u);
    ASSERT_EQ(g.edges.size(), 1u);
    EXPECT_EQ(g.edges[0], (Edge{0, 1}));
}

TEST(BuildGraph, DiagonalContactIsNotAnEdge) {
    const auto g = build_graph(map_from(2, 2, {0, 1, 2, 0}));
    // Labels 1 and 2 meet only at a corner.
    EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1}, {0, 2}}));
}

TEST(BuildGraph, MatchesPixelPairScan) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto map = random_map(seed, 14, 19);
        std::set<Edge> expect;
        for (std::size_t i = 0; i < map.labels.size(); ++i)
            for (std::size_t j = 0; j < map.labels.size(); ++j) {
                const std::size_t ri = i / map.cols, ci = i % map.cols, rj = j / map.cols, cj = j % map.cols;
                const bool adjacent = (ri == rj && (ci + 1 == cj || cj + 1 == ci)) || (ci == cj && (ri + 1 == rj || rj + 1 == ri));
                if (adjacent && map.labels[i] < map.labels[j]) expect.insert({map.labels[i], map.labels[j]});
            }
        const auto g = build_graph(map);
        EXPECT_EQ(g.edges, std::vector<Edge>(expect.begin(), expect.end()));
    }
}

TEST(NormalizeAdjacency, SingleNode) {
    const auto a = normalize_adjacency(1, {});
    ASSERT_EQ(a.nnz(), 1u);
    EXPECT_EQ(a.value[0], 1.0);
}

TEST(NormalizeAdjacency, TwoNodes) {
    const auto a = normalize_adjacency(2, {{0, 1}});
    ASSERT_EQ(a.nnz(), 4u);
    for (double v : a.value) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(NormalizeAdjacency, TriangleIsOneThird) {
    const auto a = normalize_adjacency(3, {{0, 1}, {0, 2}, {1, 2}});
    ASSERT_EQ(a.nnz(), 9u);
    for (double v : a.value) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(NormalizeAdjacency, SymmetricSortedAndInvertible) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto g = build_graph(random_map(seed, 16, 16));
        const auto& a = g.norm_adj;
        std::vector<double> degree(g.node_count, 1.0);
        for (auto [u, v] : g.edges) {
            degree[u] += 1;
            degree[v] += 1;
        }
        for (std::size_t k = 0; k < a.nnz(); ++k) {
            if (k) EXPECT_TRUE(std::make_pair(a.row[k - 1], a.col[k - 1]) < std::make_pair(a.row[k], a.col[k]));
            EXPECT_GT(a.value[k], 0.0);
            EXPECT_LE(a.value[k], 1.0);
            EXPECT_EQ(a.value[k], entry(a, a.col[k], a.row[k]));
            // D^1/2 Ã D^1/2 recovers the 0/1 entries of A + I.
            EXPECT_NEAR(std::sqrt(degree[a.row[k]]) * a.value[k] * std::sqrt(degree[a.col[k]]), 1.0, 1e-12);
        }
        EXPECT_EQ(a.nnz(), g.node_count + 2 * g.edges.size());
    }
}

TEST(Spmm, MatchesDenseProduct) {
    const auto g = build_graph(random_map(4, 12, 12));
    Rng rng(1);
    Mat<double> x(g.node_count, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Mat<double> dense = Mat<double>::Zero(g.node_count, g.node_count);
    for (std::size_t k = 0; k < g.norm_adj.nnz(); ++k) dense(g.norm_adj.row[k], g.norm_adj.col[k]) = g.norm_adj.value[k];
    Mat<double> out;
    spmm(g.norm_adj, x, out);
    EXPECT_LT((out - dense * x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Features, ConstantGridStandardizesToZero) {
    TemporalGrid<double> grid({3, 4, 4}, std::vector<double>(48, 7.5));
    const auto map = map_from(4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3});
    const auto f = build_group_features(grid, {0, 2}, map);
    for (const auto& t : f.per_timestamp)
        for (double x : t) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(f.standardization.invert(0.0), 7.5);
}

TEST(Features, TwoHalvesDestandardize) {
    std::vector<double> v;
    for (int t = 0; t < 2; ++t)
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) v.push_back(c < 2 ? 0.0 : 100.0);
    TemporalGrid<double> grid({2, 4, 4}, v);
    const auto map = map_from(4, 4, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1});
    const auto f = build_group_features(grid, {0, 1}, map);
    for (const auto& t : f.per_timestamp) {
        ASSERT_EQ(t.size(), 2u);
        EXPECT_NEAR(f.standardization.invert(t[0]), 0.0, 1e-12);
        EXPECT_NEAR(f.standardization.invert(t[1]), 100.0, 1e-12);
    }
}

TEST(Features, SynthRoundTripIsExact) {
    const auto grid = synth_field<double>(2, 10, 24, 24, 1.0);
    const auto plan = select_meta(build_signal(grid, SignalMode::reference0), 3);
    std::vector<SegmentationMap> maps;
    for (const auto& grp : plan.groups) maps.push_back(felzenszwalb(virtual_timestamp(grid, grp), SegParams{}));
    const auto feats = build_features(grid, plan, maps);
    ASSERT_EQ(feats.size(), plan.groups.size());
    for (std::size_t g = 0; g < feats.size(); ++g) {
        double sum = 0, sq = 0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < feats[g].per_timestamp.size(); ++k) {
            const auto raw = region_means(grid.frame(plan.groups[g].start + k), maps[g]);
            for (std::size_t r = 0; r < raw.size(); ++r) {
                const double z = feats[g].per_timestamp[k][r];
                EXPECT_NEAR(feats[g].standardization.invert(z), raw[r], 1e-9 * std::abs(raw[r]));
                sum += z;
                sq += z * z;
                ++n;
            }
        }
        EXPECT_NEAR(sum / n, 0.0, 1e-9);
        EXPECT_NEAR(sq / n, 1.0, 1e-9);
    }
}

TEST(Features, OneMapPerGroup) {
    const auto grid = synth_field<double>(2, 4, 6, 6, 1.0);
    MetaPlan plan{{{0, 1}, {2, 3}}, 2};
    EXPECT_THROW(build_features(grid, plan, {}), Error);
}
