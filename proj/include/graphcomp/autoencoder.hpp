#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <vector>

#include "graphcomp/bytes.hpp"
#include "graphcomp/temporal.hpp"

namespace graphcomp {

/// Temporal graph autoencoder: GCN spatial encoder + feature head, strided conv temporal stack.
template <class S>
struct TAutoG {
    ModelArch arch;
    GcnWeights<S> spatial;
    TemporalConvWeights<S> temporal;

    static TAutoG init(const ModelArch& arch, std::uint64_t seed) {
        arch.validate();
        Rng rng(seed);
        TAutoG m;
        m.arch = arch;
        m.spatial = GcnWeights<S>::init(arch, rng);
        m.temporal = TemporalConvWeights<S>::init(arch.embedding_dim(), arch, rng);
        return m;
    }

    bool has_encoder() const { return !spatial.layers.empty() && !temporal.encoder.empty(); }
};

enum class LatentPrecision : std::uint8_t {
    f16 = 2,
    f32 = 4,
};

/// Stored latent of one group: nodes x t_lat x channels, node-major.
struct LatentBlock {
    std::size_t nodes = 0;
    std::size_t length = 0;  // group length the decoder restores
    std::size_t t_lat = 0;
    std::size_t channels = 0;
    std::vector<float> values;

    bool operator==(const LatentBlock&) const = default;
};

inline float round_to(float x, LatentPrecision p) { return p == LatentPrecision::f16 ? half_to_float(float_to_half(x)) : x; }

template <class S>
LatentBlock make_latent(const SeqMat<S>& latent, std::size_t nodes, std::size_t length, LatentPrecision p) {
    LatentBlock b;
    b.nodes = nodes;
    b.length = length;
    b.channels = static_cast<std::size_t>(latent.rows());
    b.t_lat = nodes ? static_cast<std::size_t>(latent.cols()) / nodes : 0;
    b.values.resize(static_cast<std::size_t>(latent.size()));
    // Column-major storage already is (node, time, channel) order.
    for (std::size_t i = 0; i < b.values.size(); ++i) b.values[i] = round_to(static_cast<float>(latent.data()[i]), p);
    return b;
}

template <class S>
SeqMat<S> latent_matrix(const LatentBlock& b) {
    SeqMat<S> m(static_cast<Eigen::Index>(b.channels), static_cast<Eigen::Index>(b.nodes * b.t_lat));
    for (std::size_t i = 0; i < b.values.size(); ++i) m.data()[i] = static_cast<S>(b.values[i]);
    return m;
}

inline void write_latent(ByteWriter& w, const LatentBlock& b, LatentPrecision p) {
    w.put_varint(b.nodes);
    w.put_varint(b.length);
    w.put_varint(b.t_lat);
    w.put_varint(b.channels);
    for (float v : b.values) {
        if (p == LatentPrecision::f16)
            w.put_u16(float_to_half(v));
        else
            w.put_f32(v);
    }
}

inline LatentBlock read_latent(ByteReader& r, LatentPrecision p) {
    LatentBlock b;
    b.nodes = r.get_varint();
    b.length = r.get_varint();
    b.t_lat = r.get_varint();
    b.channels = r.get_varint();
    const std::size_t unit = p == LatentPrecision::f16 ? 2 : 4;
    require(b.channels != 0 && b.t_lat != 0 && b.nodes <= r.remaining(), ErrorKind::format, "corrupt latent header");
    const std::size_t count = r.checked_size(static_cast<std::uint64_t>(b.nodes) * b.t_lat * b.channels, unit);
    b.values.resize(count);
    for (auto& v : b.values) v = p == LatentPrecision::f16 ? half_to_float(r.get_u16()) : r.get_f32();
    return b;
}

/// Everything but the encoders round-trips through 32-bit storage.
template <class S>
void round_weights_to_f32(TAutoG<S>& m) {
    auto round = [](S* p, std::size_t n, auto...) {
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<S>(static_cast<float>(p[i]));
    };
    m.spatial.for_each_tensor(round);
    m.temporal.for_each_tensor(round);
}

namespace detail {

template <class Matrix>
void put_matrix(ByteWriter& w, const Matrix& m) {
    w.put_varint(static_cast<std::uint64_t>(m.rows()));
    w.put_varint(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) w.put_f32(static_cast<float>(m(i, j)));
}

template <class Matrix>
Matrix get_matrix(ByteReader& r) {
    const auto rows = r.get_varint(), cols = r.get_varint();
    require(rows > 0 && cols > 0 && rows <= r.remaining() && cols <= r.remaining(), ErrorKind::format,
            "corrupt matrix header");
    r.checked_size(rows * cols, 4);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<typename Matrix::Scalar>(r.get_f32());
    return m;
}

template <class S>
void put_conv(ByteWriter& w, const ConvLayer<S>& c) {
    w.put_varint(c.in_channels);
    w.put_varint(c.out_channels);
    w.put_varint(c.kernel);
    w.put_varint(c.stride);
    w.put_u8(static_cast<std::uint8_t>((c.transposed ? 1 : 0) | (c.relu ? 2 : 0)));
    for (const auto& t : c.taps) put_matrix(w, t);
    put_matrix(w, SeqMat<S>(c.bias));
}

template <class S>
ConvLayer<S> get_conv(ByteReader& r) {
    ConvLayer<S> c;
    c.in_channels = r.get_varint();
    c.out_channels = r.get_varint();
    c.kernel = r.get_varint();
    c.stride = r.get_varint();
    const auto flags = r.get_u8();
    c.transposed = flags & 1;
    c.relu = flags & 2;
    require(c.kernel >= 1 && c.kernel <= 64 && c.stride >= 1 && c.stride <= c.kernel, ErrorKind::format,
            "corrupt conv layer");
    for (std::size_t j = 0; j < c.kernel; ++j) {
        c.taps.push_back(get_matrix<SeqMat<S>>(r));
        require(static_cast<std::size_t>(c.taps.back().rows()) == c.out_channels &&
                    static_cast<std::size_t>(c.taps.back().cols()) == c.in_channels,
                ErrorKind::format, "conv tap shape mismatch");
    }
    SeqMat<S> b = get_matrix<SeqMat<S>>(r);
    require(static_cast<std::size_t>(b.size()) == c.out_channels, ErrorKind::format, "conv bias shape mismatch");
    c.bias = b.col(0);
    return c;
}

inline void put_arch(ByteWriter& w, const ModelArch& a) {
    w.put_varint(a.gcn_dims.size());
    for (auto d : a.gcn_dims) w.put_varint(d);
    w.put_varint(a.conv_channels.size());
    for (auto d : a.conv_channels) w.put_varint(d);
    w.put_varint(a.kernel);
    w.put_varint(a.stride);
}

inline ModelArch get_arch(ByteReader& r) {
    ModelArch a;
    a.gcn_dims.resize(r.checked_size(r.get_varint()));
    for (auto& d : a.gcn_dims) d = r.get_varint();
    a.conv_channels.resize(r.checked_size(r.get_varint()));
    for (auto& d : a.conv_channels) d = r.get_varint();
    a.kernel = r.get_varint();
    a.stride = r.get_varint();
    try {
        a.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::format, std::string("stored architecture invalid: ") + e.what());
    }
    return a;
}

}  // namespace detail

/// Decode-side weights only: temporal decoder and feature head.
template <class S>
void write_decoder(ByteWriter& w, const TAutoG<S>& m) {
    detail::put_arch(w, m.arch);
    w.put_varint(m.temporal.decoder.size());
    for (const auto& c : m.temporal.decoder) detail::put_conv(w, c);
    detail::put_matrix(w, m.spatial.head);
    w.put_f32(static_cast<float>(m.spatial.head_bias(0)));
}

template <class S>
TAutoG<S> read_decoder(ByteReader& r) {
    TAutoG<S> m;
    m.arch = detail::get_arch(r);
    const auto layers = r.checked_size(r.get_varint());
    require(layers == m.arch.conv_channels.size(), ErrorKind::format, "decoder depth mismatch");
    for (std::size_t i = 0; i < layers; ++i) m.temporal.decoder.push_back(detail::get_conv<S>(r));
    m.spatial.head = detail::get_matrix<Mat<S>>(r);
    m.spatial.head_bias = Vec<S>::Constant(1, static_cast<S>(r.get_f32()));
    require(static_cast<std::size_t>(m.spatial.head.rows()) == m.temporal.input_channels() && m.spatial.head.cols() == 1,
            ErrorKind::format, "feature head shape mismatch");
    return m;
}

inline constexpr char model_magic[8] = {'G', 'R', 'C', 'M', 'P', 'M', 'D', 'L'};

/// Full model (encoders included) for reuse across compress runs.
template <class S>
Bytes serialize_model(const TAutoG<S>& m) {
    require(m.has_encoder(), ErrorKind::config, "model has no encoder to save");
    ByteWriter body;
    detail::put_arch(body, m.arch);
    for (const auto& l : m.spatial.layers) detail::put_matrix(body, l);
    for (const auto& c : m.temporal.encoder) detail::put_conv(body, c);
    write_decoder(body, m);
    ByteWriter out;
    out.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(model_magic), 8));
    out.put_u16(1);
    out.put_u64(body.size());
    out.put_u64(checksum64(body.bytes()));
    out.put_bytes(body.bytes());
    return out.take();
}

template <class S>
TAutoG<S> deserialize_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.get_bytes(8);
    require(std::memcmp(magic.data(), model_magic, 8) == 0, ErrorKind::format, "not a model file");
    require(r.get_u16() == 1, ErrorKind::format, "unsupported model file version");
    const auto len = r.checked_size(r.get_u64());
    const auto sum = r.get_u64();
    const auto body = r.get_bytes(len);
    require(checksum64(body) == sum, ErrorKind::checksum, "model file checksum mismatch");
    ByteReader b(body);
    TAutoG<S> m;
    m.arch = detail::get_arch(b);
    std::size_t in = 1;
    for (auto d : m.arch.gcn_dims) {
        m.spatial.layers.push_back(detail::get_matrix<Mat<S>>(b));
        require(static_cast<std::size_t>(m.spatial.layers.back().rows()) == in &&
                    static_cast<std::size_t>(m.spatial.layers.back().cols()) == d,
                ErrorKind::format, "GCN layer shape mismatch");
        in = d;
    }
    for (std::size_t i = 0; i < m.arch.conv_channels.size(); ++i) m.temporal.encoder.push_back(detail::get_conv<S>(b));
    auto dec = read_decoder<S>(b);
    require(dec.arch.gcn_dims == m.arch.gcn_dims && dec.arch.conv_channels == m.arch.conv_channels, ErrorKind::format,
            "model sections disagree on architecture");
    m.temporal.decoder = std::move(dec.temporal.decoder);
    m.spatial.head = std::move(dec.spatial.head);
    m.spatial.head_bias = std::move(dec.spatial.head_bias);
    require(b.at_end(), ErrorKind::format, "trailing bytes in model file");
    return m;
}

/// Decodes one group's latent into standardized features F̂[t][v].
template <class S>
std::vector<std::vector<double>> decode_features(const TAutoG<S>& m, const LatentBlock& latent) {
    const SeqMat<S> z = latent_matrix<S>(latent);
    const SeqMat<S> h = temporal_decode(m.temporal, z, latent.nodes, latent.length);
    // feature_i = head · h_i + bias for every (node, time) column
    const Eigen::Matrix<S, 1, Eigen::Dynamic> f =
        (m.spatial.head.col(0).transpose() * h).array() + m.spatial.head_bias(0);
    std::vector<std::vector<double>> out(latent.length, std::vector<double>(latent.nodes));
    for (std::size_t v = 0; v < latent.nodes; ++v)
        for (std::size_t t = 0; t < latent.length; ++t)
            out[t][v] = static_cast<double>(f(static_cast<Eigen::Index>(v * latent.length + t)));
    return out;
}

}  // namespace graphcomp
