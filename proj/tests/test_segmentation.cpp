#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>

#include "graphcomp/grid.hpp"
#include "graphcomp/segmentation.hpp"

using namespace graphcomp;

namespace {

Field2D<double> two_halves(std::size_t m, std::size_t n) {
    Field2D<double> f(m, n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = n / 2; c < n; ++c) f(r, c) = 100.0;
    return f;
}

Field2D<double> random_field(std::uint64_t seed, std::size_t m, std::size_t n, double spread) {
    Rng rng(seed);
    Field2D<double> f(m, n, 0.0);
    for (auto& v : f.values) v = rng.uniform(0.0, spread);
    return f;
}

bool regions_connected(const SegmentationMap& map) {
    std::vector<bool> seen(map.labels.size(), false);
    std::vector<bool> label_done(map.region_count, false);
    for (std::size_t start = 0; start < map.labels.size(); ++start) {
        const auto label = map.labels[start];
        if (label_done[label]) continue;
        label_done[label] = true;
        std::size_t reached = 0;
        std::queue<std::size_t> q;
        q.push(start);
        seen[start] = true;
        while (!q.empty()) {
            const auto i = q.front();
            q.pop();
            ++reached;
            const std::size_t r = i / map.cols, c = i % map.cols;
            auto visit = [&](std::size_t j) {
                if (!seen[j] && map.labels[j] == label) {
                    seen[j] = true;
                    q.push(j);
                }
            };
            if (c > 0) visit(i - 1);
            if (c + 1 < map.cols) visit(i + 1);
            if (r > 0) visit(i - map.cols);
            if (r + 1 < map.rows) visit(i + map.cols);
        }
        if (reached != map.region_sizes[label]) return false;
    }
    return true;
}

// Direct transcription of the merge rule with explicit component label arrays.
std::vector<std::uint32_t> naive_segment(const Field2D<double>& f, double scale, std::size_t min_size) {
    const std::size_t m = f.rows, n = f.cols, count = m * n;
    struct E {
        double w;
        std::size_t a, b, gen;
    };
    std::vector<E> edges;
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t i = r * n + c;
            if (c + 1 < n) edges.push_back({std::abs(f.values[i] - f.values[i + 1]), i, i + 1, edges.size()});
            if (r + 1 < m) edges.push_back({std::abs(f.values[i] - f.values[i + n]), i, i + n, edges.size()});
        }
    std::sort(edges.begin(), edges.end(), [](const E& x, const E& y) { return x.w != y.w ? x.w < y.w : x.gen < y.gen; });
    std::vector<std::size_t> comp(count);
    std::iota(comp.begin(), comp.end(), 0);
    std::vector<double> internal(count, 0.0);
    auto size_of = [&](std::size_t c) { return static_cast<std::size_t>(std::count(comp.begin(), comp.end(), c)); };
    auto merge = [&](std::size_t keep, std::size_t gone) {
        for (auto& c : comp)
            if (c == gone) c = keep;
    };
    for (const auto& e : edges) {
        const auto a = comp[e.a], b = comp[e.b];
        if (a == b) continue;
        const double ta = internal[a] + scale / static_cast<double>(size_of(a));
        const double tb = internal[b] + scale / static_cast<double>(size_of(b));
        if (e.w <= ta && e.w <= tb) {
            merge(a, b);
            internal[a] = e.w;
        }
    }
    for (const auto& e : edges) {
        const auto a = comp[e.a], b = comp[e.b];
        if (a != b && (size_of(a) < min_size || size_of(b) < min_size)) merge(a, b);
    }
    std::map<std::size_t, std::uint32_t> dense;
    std::vector<std::uint32_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto it = dense.try_emplace(comp[i], static_cast<std::uint32_t>(dense.size())).first;
        out[i] = it->second;
    }
    return out;
}

}  // namespace

TEST(Felzenszwalb, ConstantFieldIsOneRegion) {
    const auto map = felzenszwalb(Field2D<double>(8, 8, 3.0), SegParams{});
    EXPECT_EQ(map.region_count, 1u);
    EXPECT_EQ(map.region_sizes[0], 64u);
}

TEST(Felzenszwalb, TwoHalves) {
    const auto map = felzenszwalb(two_halves(8, 8), SegParams{10.0, 0.0, 1});
    ASSERT_EQ(map.region_count, 2u);
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(map.labels[r * 8 + c], c < 4 ? 0u : 1u);
}

TEST(Felzenszwalb, SmoothingKeepsHalvesApart) {
    const auto map = felzenszwalb(two_halves(16, 16), SegParams{});
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 8; ++c)
            for (std::size_t c2 = 8; c2 < 16; ++c2) EXPECT_NE(map.labels[r * 16 + c], map.labels[r * 16 + c2]);
}

TEST(Felzenszwalb, MinSizeOfWholePlaneGivesOneRegion) {
    const auto f = random_field(3, 12, 10, 100.0);
    EXPECT_GT(felzenszwalb(f, SegParams{1.0, 0.0, 1}).region_count, 1u);
    const auto map = felzenszwalb(f, SegParams{1.0, 0.0, 120});
    EXPECT_EQ(map.region_count, 1u);
}

TEST(Felzenszwalb, MatchesNaiveTranscription) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto f = random_field(seed, 9, 11, 30.0);
        for (std::size_t min_size : {1u, 4u}) {
            const auto map = felzenszwalb(f, SegParams{10.0, 0.0, min_size});
            EXPECT_EQ(map.labels, naive_segment(f, 10.0, min_size)) << "seed " << seed;
        }
    }
}

TEST(Felzenszwalb, InvariantsOnRandomFields) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto f = random_field(100 + seed, 20, 17, 40.0);
        const SegParams p{5.0, 0.8, 1 + seed % 7};
        const auto map = felzenszwalb(f, p);
        EXPECT_TRUE(regions_connected(map));
        EXPECT_GE(*std::min_element(map.region_sizes.begin(), map.region_sizes.end()), p.min_size);
        EXPECT_EQ(std::accumulate(map.region_sizes.begin(), map.region_sizes.end(), std::size_t{0}), f.size());
        EXPECT_EQ(map, felzenszwalb(f, p));
    }
}

TEST(Felzenszwalb, LabelsAreDenseInFirstOccurrenceOrder) {
    const auto map = felzenszwalb(random_field(8, 10, 10, 50.0), SegParams{2.0, 0.0, 1});
    std::uint32_t next = 0;
    for (auto l : map.labels) {
        EXPECT_LE(l, next);
        if (l == next) ++next;
    }
    EXPECT_EQ(next, map.region_count);
}

TEST(Felzenszwalb, LargerScaleDoesNotAddRegionsOnSynthFields) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto g = synth_field<double>(seed, 1, 48, 48, 0.5);
        std::size_t prev = SIZE_MAX;
        for (double scale : {1.0, 3.0, 10.0, 30.0, 100.0}) {
            const auto r = felzenszwalb(g.field(0), SegParams{scale, 1.0, 1}).region_count;
            EXPECT_LE(r, prev) << "seed " << seed << " scale " << scale;
            prev = r;
        }
    }
}

TEST(Labels, SingleRunRoundTrip) {
    const auto map = felzenszwalb(Field2D<double>(5, 7, 1.0), SegParams{});
    const auto bytes = serialize_labels(map);
    EXPECT_EQ(deserialize_labels(bytes, 5, 7), map);
    ByteReader r(bytes);
    EXPECT_EQ(r.get_varint(), 1u);
}

TEST(Labels, TwoHalvesRoundTrip) {
    const auto map = felzenszwalb(two_halves(8, 8), SegParams{10.0, 0.0, 1});
    EXPECT_EQ(deserialize_labels(serialize_labels(map), 8, 8), map);
}

TEST(Labels, SynthRoundTripIsSmallerThanRaw) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = synth_field<float>(seed, 1, 64, 64, 1.0);
        const auto map = felzenszwalb(g.field(0), SegParams{});
        const auto bytes = serialize_labels(map);
        EXPECT_EQ(deserialize_labels(bytes, 64, 64), map);
        EXPECT_LT(bytes.size(), 4u * 64 * 64);
    }
}

TEST(Labels, RejectsCorruptStreams) {
    const auto map = felzenszwalb(two_halves(8, 8), SegParams{10.0, 0.0, 1});
    auto bytes = serialize_labels(map);
    EXPECT_THROW(deserialize_labels(bytes, 8, 9), Error);
    bytes.pop_back();
    EXPECT_THROW(deserialize_labels(bytes, 8, 8), Error);
}

TEST(RegionMeans, ConstantField) {
    const auto map = felzenszwalb(random_field(1, 6, 6, 100.0), SegParams{1.0, 0.0, 1});
    for (double m : region_means(Field2D<double>(6, 6, 4.25), map)) EXPECT_EQ(m, 4.25);
}

TEST(RegionMeans, TwoHalves) {
    const auto f = two_halves(8, 8);
    const auto means = region_means(f, felzenszwalb(f, SegParams{10.0, 0.0, 1}));
    ASSERT_EQ(means.size(), 2u);
    EXPECT_EQ(means[0], 0.0);
    EXPECT_EQ(means[1], 100.0);
}

TEST(RegionMeans, MatchesPerPixelAccumulation) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto f = random_field(seed, 15, 13, 1000.0);
        const auto map = felzenszwalb(random_field(seed + 50, 15, 13, 40.0), SegParams{10.0, 0.0, 3});
        std::vector<long double> sum(map.region_count, 0);
        std::vector<std::size_t> cnt(map.region_count, 0);
        for (std::size_t i = 0; i < f.size(); ++i) {
            sum[map.labels[i]] += f.values[i];
            ++cnt[map.labels[i]];
        }
        const auto means = region_means(f, map);
        for (std::size_t r = 0; r < map.region_count; ++r) {
            const double expect = static_cast<double>(sum[r] / cnt[r]);
            EXPECT_NEAR(means[r], expect, 1e-12 * std::abs(expect));
        }
    }
}

TEST(RegionMeans, ShapeMismatch) {
    const auto map = felzenszwalb(Field2D<double>(4, 4, 0.0), SegParams{});
    EXPECT_THROW(region_means(Field2D<double>(4, 5, 0.0), map), Error);
}
