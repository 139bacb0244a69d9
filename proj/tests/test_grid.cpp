#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

#include <unistd.h>

#include "graphcomp/grid.hpp"

using namespace graphcomp;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("graphcomp_test_" + std::to_string(::getpid()) + "_" + name);
}

template <class S>
void write_values(const fs::path& p, const std::vector<S>& v) {
    write_file(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(v.data()), v.size() * sizeof(S)));
}

}  // namespace

TEST(Grid, LoadsEightValues) {
    const auto p = temp_file("eight.raw");
    std::vector<float> v(8);
    std::iota(v.begin(), v.end(), 0.0f);
    write_values(p, v);
    const auto g = load_grid<float>(p, {2, 2, 2});
    EXPECT_EQ(g.range().min, 0.0f);
    EXPECT_EQ(g.range().max, 7.0f);
    EXPECT_EQ(g.size(), 8u);
    fs::remove(p);
}

TEST(Grid, ShortFileIsDimensionError) {
    const auto p = temp_file("seven.raw");
    write_values(p, std::vector<float>(7, 1.0f));
    try {
        load_grid<float>(p, {2, 2, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::dimension);
    }
    fs::remove(p);
}

TEST(Grid, NanIsInvalidValue) {
    const auto p = temp_file("nan.raw");
    std::vector<double> v(8, 1.0);
    v[5] = std::numeric_limits<double>::quiet_NaN();
    write_values(p, v);
    try {
        load_grid<double>(p, {2, 2, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_value);
    }
    fs::remove(p);
}

TEST(Grid, InfinityIsInvalidValue) {
    std::vector<float> v(4, 0.0f);
    v[0] = std::numeric_limits<float>::infinity();
    EXPECT_THROW((TemporalGrid<float>({1, 2, 2}, v)), Error);
}

TEST(Grid, MissingFileIsIoError) {
    try {
        load_grid<float>(temp_file("does_not_exist.raw"), {1, 1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}

TEST(Grid, ConstantRange) {
    TemporalGrid<float> g({2, 3, 3}, std::vector<float>(18, 5.0f));
    EXPECT_EQ(g.range().min, 5.0f);
    EXPECT_EQ(g.range().max, 5.0f);
    EXPECT_EQ(ErrorBound::from(1e-2, g.range()).absolute, 0.0);
}

TEST(Grid, SmallRange) {
    const std::vector<double> v{-1.0, 0.0, 3.0};
    const auto r = vrange<double>(v);
    EXPECT_EQ(r.min, -1.0);
    EXPECT_EQ(r.max, 3.0);
}

TEST(Grid, RangeMatchesTwoPassScan) {
    Rng rng(11);
    std::vector<double> v(10 * 8 * 8);
    for (auto& x : v) x = rng.normal() * 50.0;
    TemporalGrid<double> g({10, 8, 8}, v);
    double lo = v[0], hi = v[0];
    for (double x : v) lo = x < lo ? x : lo;
    for (double x : v) hi = x > hi ? x : hi;
    EXPECT_EQ(g.range().min, lo);
    EXPECT_EQ(g.range().max, hi);

    std::vector<double> shuffled = v;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[3], shuffled[200]);
    const auto r2 = vrange<double>(shuffled);
    EXPECT_EQ(r2.min, lo);
    EXPECT_EQ(r2.max, hi);
}

TEST(Grid, AbsoluteBoundScalesRange) {
    TemporalGrid<double> g({1, 1, 2}, {10.0, 30.0});
    const auto b = ErrorBound::from(1e-2, g.range());
    EXPECT_DOUBLE_EQ(b.absolute, 0.2);
    EXPECT_THROW(ErrorBound::from(0.0, g.range()), Error);
}

TEST(Grid, StoreLoadIsBitIdentical) {
    const auto f32 = synth_field<float>(3, 4, 9, 7, 1.0);
    const auto f64 = synth_field<double>(3, 4, 9, 7, 1.0);
    const auto p32 = temp_file("rt32.raw"), p64 = temp_file("rt64.raw");
    store_grid(p32, f32);
    store_grid(p64, f64);
    const auto b32 = load_grid<float>(p32, f32.dims());
    const auto b64 = load_grid<double>(p64, f64.dims());
    EXPECT_TRUE(std::equal(b32.values().begin(), b32.values().end(), f32.values().begin()));
    EXPECT_TRUE(std::equal(b64.values().begin(), b64.values().end(), f64.values().begin()));
    fs::remove(p32);
    fs::remove(p64);
}

TEST(Grid, SidecarRoundTrip) {
    const auto p = temp_file("side.raw");
    write_sidecar(p, {{5, 6, 7}, Precision::f64});
    const auto h = read_sidecar(p);
    ASSERT_TRUE(h.has_value());
    EXPECT_EQ(h->dims, (GridDims{5, 6, 7}));
    EXPECT_EQ(h->precision, Precision::f64);
    EXPECT_FALSE(read_sidecar(temp_file("nope.raw")).has_value());
    auto side = p;
    side += ".dims";
    fs::remove(side);
}

TEST(Grid, ParseDims) {
    EXPECT_EQ(parse_dims("50,64,32"), (GridDims{50, 64, 32}));
    EXPECT_THROW(parse_dims("50x64x32"), Error);
    EXPECT_THROW(parse_dims("0,4,4"), Error);
    EXPECT_THROW(parse_dims("4,4"), Error);
}

TEST(Grid, FieldView) {
    TemporalGrid<float> g({2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    const auto f = g.field(1);
    EXPECT_EQ(f.rows, 2u);
    EXPECT_EQ(f(1, 2), 11.0f);
    EXPECT_EQ(g.frame(0)[4], 4.0f);
}

TEST(Synth, SameSeedIsBitIdentical) {
    const auto a = synth_field<double>(42, 6, 10, 12, 1.0);
    const auto b = synth_field<double>(42, 6, 10, 12, 1.0);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    const auto c = synth_field<double>(43, 6, 10, 12, 1.0);
    EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
}

TEST(Synth, HugeSmoothnessIsNearConstant) {
    const auto g = synth_field<double>(5, 4, 32, 32, 1e9);
    EXPECT_LT(g.range().width(), 1e-3 * std::abs(g.range().max));
}

TEST(Synth, FrozenMoments) {
    const auto g = synth_field<float>(1, 50, 64, 64, 1.0);
    double sum = 0, sq = 0;
    for (float v : g.values()) sum += v;
    const double mean = sum / static_cast<double>(g.size());
    for (float v : g.values()) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(g.size()));
    EXPECT_NEAR(mean, 277.0299050795, 1e-5);
    EXPECT_NEAR(sd, 25.3425435348, 1e-5);
}
