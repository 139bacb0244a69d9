#include <gtest/gtest.h>

#include <cmath>

#include "graphcomp/pipeline.hpp"

using namespace graphcomp;

namespace {

ModelArch small_arch() {
    ModelArch a;
    a.gcn_dims = {4, 6, 3};
    a.conv_channels = {5, 2};
    return a;
}

template <class S>
std::vector<double> flatten(TAutoG<S>& m, bool decode_only) {
    std::vector<double> out;
    auto take = [&](S* p, std::size_t n, auto...) { out.insert(out.end(), p, p + n); };
    if (!decode_only) {
        m.spatial.for_each_tensor(take);
        for (auto& l : m.temporal.encoder) {
            for (auto& t : l.taps) take(t.data(), static_cast<std::size_t>(t.size()));
            take(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
        }
    } else {
        take(m.spatial.head.data(), static_cast<std::size_t>(m.spatial.head.size()));
        take(m.spatial.head_bias.data(), 1);
    }
    for (auto& l : m.temporal.decoder) {
        for (auto& t : l.taps) take(t.data(), static_cast<std::size_t>(t.size()));
        take(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
    }
    return out;
}

}  // namespace

TEST(Half, KnownEncodings) {
    EXPECT_EQ(float_to_half(1.0f), 0x3C00);
    EXPECT_EQ(float_to_half(-2.0f), 0xC000);
    EXPECT_EQ(float_to_half(65504.0f), 0x7BFF);
    EXPECT_EQ(float_to_half(0.1f), 0x2E66);
    EXPECT_EQ(float_to_half(std::ldexp(1.0f, -24)), 0x0001);
    EXPECT_EQ(float_to_half(0.0f), 0x0000);
    EXPECT_EQ(half_to_float(0x3555), 0.333251953125f);
}

TEST(Half, EveryFiniteHalfRoundTrips) {
    for (std::uint32_t h = 0; h < 0x10000; ++h) {
        if ((h & 0x7C00) == 0x7C00) continue;
        const float f = half_to_float(static_cast<std::uint16_t>(h));
        EXPECT_EQ(float_to_half(f), static_cast<std::uint16_t>(h)) << h;
    }
}

TEST(Latent, PrecisionRoundTrips) {
    Rng rng(1);
    SeqMat<double> z(3, 4 * 2);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    for (auto p : {LatentPrecision::f16, LatentPrecision::f32}) {
        const auto block = make_latent(z, 4, 13, p);
        EXPECT_EQ(block.t_lat, 2u);
        EXPECT_EQ(block.channels, 3u);
        ByteWriter w;
        write_latent(w, block, p);
        EXPECT_EQ(w.size() - 4, block.values.size() * static_cast<std::size_t>(p));
        ByteReader r(w.bytes());
        EXPECT_EQ(read_latent(r, p), block);
        EXPECT_TRUE(r.at_end());
        const auto back = latent_matrix<double>(block);
        const double tol = p == LatentPrecision::f16 ? 1e-3 : 1e-7;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            EXPECT_LE(std::abs(back.data()[i] - z.data()[i]), tol * std::max(1.0, std::abs(z.data()[i])));
    }
}

TEST(Latent, TruncatedBlockIsFormatError) {
    SeqMat<double> z = SeqMat<double>::Ones(2, 6);
    ByteWriter w;
    write_latent(w, make_latent(z, 3, 4, LatentPrecision::f32), LatentPrecision::f32);
    auto bytes = w.take();
    bytes.resize(bytes.size() - 3);
    ByteReader r(bytes);
    try {
        read_latent(r, LatentPrecision::f32);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::format);
    }
}

TEST(Model, DecoderRoundTripsAt32Bit) {
    auto m = TAutoG<double>::init(small_arch(), 5);
    ByteWriter w;
    write_decoder(w, m);
    ByteReader r(w.bytes());
    auto back = read_decoder<double>(r);
    EXPECT_TRUE(r.at_end());
    EXPECT_FALSE(back.has_encoder());
    round_weights_to_f32(m);
    EXPECT_EQ(flatten(back, true), flatten(m, true));
    EXPECT_EQ(back.arch.conv_channels, m.arch.conv_channels);
}

TEST(Model, FullModelRoundTrips) {
    auto m = TAutoG<float>::init(small_arch(), 6);
    const auto bytes = serialize_model(m);
    auto back = deserialize_model<float>(bytes);
    EXPECT_EQ(flatten(back, false), flatten(m, false));
    EXPECT_EQ(serialize_model(back), bytes);
}

TEST(Model, CorruptionIsDetected) {
    const auto bytes = serialize_model(TAutoG<double>::init(small_arch(), 7));
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    try {
        deserialize_model<double>(flipped);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::checksum);
    }
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        deserialize_model<double>(bad_magic);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::format);
    }
    const Bytes truncated(bytes.begin(), bytes.begin() + 20);
    EXPECT_THROW(deserialize_model<double>(truncated), Error);
}

TEST(Model, DecoderOnlyModelCannotBeSaved) {
    auto m = TAutoG<double>::init(small_arch(), 8);
    m.temporal.encoder.clear();
    EXPECT_THROW(serialize_model(m), Error);
}

TEST(DecodeFeatures, MatchesHeadOverDecodedSequence) {
    auto m = TAutoG<double>::init(small_arch(), 9);
    m.spatial.head_bias(0) = 0.75;
    Rng rng(2);
    const std::size_t nodes = 3, length = 7;
    const auto lens = m.temporal.lengths(length);
    SeqMat<double> z(2, static_cast<Eigen::Index>(nodes * lens.back()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(rng.normal());
    const auto block = make_latent(z, nodes, length, LatentPrecision::f32);
    const auto feats = decode_features(m, block);
    ASSERT_EQ(feats.size(), length);
    const auto h = temporal_decode(m.temporal, z, nodes, length);
    for (std::size_t t = 0; t < length; ++t) {
        ASSERT_EQ(feats[t].size(), nodes);
        for (std::size_t v = 0; v < nodes; ++v) {
            double expect = 0.75;
            for (Eigen::Index k = 0; k < h.rows(); ++k) expect += m.spatial.head(k, 0) * h(k, static_cast<Eigen::Index>(v * length + t));
            EXPECT_NEAR(feats[t][v], expect, 1e-12);
        }
    }
}

TEST(PredictWindow, SingleRegionPaintsWholePlane) {
    const auto m = TAutoG<double>::init(small_arch(), 10);
    SegmentationMap map{3, 4, std::vector<std::uint32_t>(12, 0), 1, {12}};
    WindowHeader header{{0, 4}, {{{0, 4}, {10.0, 2.0}}}};
    const auto lens = m.temporal.lengths(5);
    SeqMat<double> z = SeqMat<double>::Constant(2, static_cast<Eigen::Index>(lens.back()), 0.3);
    std::vector<LatentBlock> latents{make_latent(z, 1, 5, LatentPrecision::f32)};
    std::vector<double> out(5 * 12, -1);
    detail::predict_window<double>(m, header, {map}, latents, 12, out);
    const auto feats = decode_features(m, latents[0]);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(out[t * 12 + i], feats[t][0] * 2.0 + 10.0);
}

TEST(PredictWindow, InconsistentLatentIsRejected) {
    const auto m = TAutoG<double>::init(small_arch(), 11);
    SegmentationMap map{2, 2, {0, 0, 1, 1}, 2, {2, 2}};
    WindowHeader header{{0, 3}, {{{0, 3}, {}}}};
    const auto lens = m.temporal.lengths(4);
    SeqMat<double> z = SeqMat<double>::Zero(2, static_cast<Eigen::Index>(lens.back()));
    std::vector<LatentBlock> latents{make_latent(z, 1, 4, LatentPrecision::f32)};
    std::vector<double> out(16);
    EXPECT_THROW(detail::predict_window<double>(m, header, {map}, latents, 4, out), Error);
}

TEST(Prediction, SynthBeatsZeroPredictor) {
    const auto grid = synth_field<float>(1, 50, 64, 64, 1.0);
    const auto res = compress(grid, CompressConfig::compact());
    double model = 0, zero = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        model += std::abs(static_cast<double>(res.prediction[i]) - grid.values()[i]);
        zero += std::abs(static_cast<double>(grid.values()[i]));
    }
    EXPECT_LT(model, zero);
}

TEST(Prediction, TwoLevelGridReconstructsWithinBound) {
    std::vector<float> v(8 * 16 * 16);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i < v.size() / 2 ? 3.0f : 7.0f;
    const TemporalGrid<float> grid({8, 16, 16}, v);
    const auto res = compress(grid, CompressConfig::compact());
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(res.reconstruction[i] - v[i]), 4.0f * 1e-2f);
}
