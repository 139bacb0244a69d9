#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "graphcomp/grid.hpp"
#include "graphcomp/huffman.hpp"

namespace graphcomp {

/// Linear-scale quantizer with bins of width 2e; code 0 marks an unpredictable point.
struct Quantizer {
    double bound = 0;  // absolute bound e
    std::uint32_t radius = 32768;

    /// Round-half-away-from-zero of residual / 2e, offset into [1, 2 radius + 1].
    std::uint32_t quantize(double residual) const {
        if (!(bound > 0)) return 0;
        const double q = std::round(residual / (2.0 * bound));
        if (!(std::abs(q) <= static_cast<double>(radius))) return 0;
        return static_cast<std::uint32_t>(static_cast<std::int64_t>(q) + radius + 1);
    }

    double correction(std::uint32_t code) const {
        return static_cast<double>(static_cast<std::int64_t>(code) - static_cast<std::int64_t>(radius) - 1) *
               (2.0 * bound);
    }

    template <std::floating_point S>
    S reconstruct(S predicted, std::uint32_t code) const {
        return static_cast<S>(static_cast<double>(predicted) + correction(code));
    }
};

/// The relative-error test shared by the encoder and by verification.
template <std::floating_point S>
bool within_bound(S original, S reconstructed, double eps, double range_width) {
    return std::abs(static_cast<double>(original) - static_cast<double>(reconstructed)) / range_width <= eps;
}

template <std::floating_point S>
struct ResidualStream {
    std::vector<std::uint32_t> codes;
    std::vector<S> outliers;  // verbatim values of code-0 points, in order

    bool operator==(const ResidualStream&) const = default;
};

/// Quantizes original - predicted. Any point whose reconstruction would miss the
/// bound (including rounding in S) is stored verbatim. `reconstruction` receives
/// exactly what the decoder will produce.
template <std::floating_point S>
ResidualStream<S> quantize_residuals(std::span<const S> original, std::span<const S> predicted, const Quantizer& q,
                                     double eps, double range_width, std::vector<S>* reconstruction = nullptr) {
    require(original.size() == predicted.size(), ErrorKind::dimension, "prediction and data differ in size");
    ResidualStream<S> out;
    out.codes.resize(original.size());
    if (reconstruction) reconstruction->resize(original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        std::uint32_t code = q.quantize(static_cast<double>(original[i]) - static_cast<double>(predicted[i]));
        S value = original[i];
        if (code != 0) {
            value = q.reconstruct(predicted[i], code);
            if (!within_bound(original[i], value, eps, range_width)) code = 0;
        }
        if (code == 0) {
            value = original[i];
            out.outliers.push_back(original[i]);
        }
        out.codes[i] = code;
        if (reconstruction) (*reconstruction)[i] = value;
    }
    return out;
}

/// predicted + correction per point, or the verbatim value for code 0.
template <std::floating_point S>
std::vector<S> correct(std::span<const S> predicted, const ResidualStream<S>& stream, const Quantizer& q) {
    require(predicted.size() == stream.codes.size(), ErrorKind::dimension, "residual stream does not match the grid");
    std::vector<S> out(predicted.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (stream.codes[i] == 0) {
            require(k < stream.outliers.size(), ErrorKind::format, "missing outlier values");
            out[i] = stream.outliers[k++];
        } else {
            out[i] = q.reconstruct(predicted[i], stream.codes[i]);
        }
    }
    require(k == stream.outliers.size(), ErrorKind::format, "unused outlier values");
    return out;
}

/// Fraction of points with |predicted - original| > e.
template <std::floating_point S>
double erroneous_fraction(std::span<const S> predicted, std::span<const S> original, double e) {
    require(predicted.size() == original.size() && !original.empty(), ErrorKind::dimension,
            "prediction and data differ in size");
    std::size_t bad = 0;
    for (std::size_t i = 0; i < original.size(); ++i)
        if (std::abs(static_cast<double>(predicted[i]) - static_cast<double>(original[i])) > e) ++bad;
    return static_cast<double>(bad) / static_cast<double>(original.size());
}

/// Chunk layout: [count][outlier count][code lengths][bitstream blob][raw outliers].
template <std::floating_point S>
Bytes encode_stream(const ResidualStream<S>& s) {
    std::size_t zeros = 0;
    std::map<std::uint32_t, std::uint64_t> freq;
    for (auto c : s.codes) {
        ++freq[c];
        zeros += c == 0;
    }
    require(zeros == s.outliers.size(), ErrorKind::invalid_value, "outlier count does not match code-0 entries");
    const auto code = HuffmanCode::from_frequencies(freq);
    BitWriter bits;
    for (auto c : s.codes) code.encode(c, bits);

    ByteWriter w;
    w.put_varint(s.codes.size());
    w.put_varint(s.outliers.size());
    code.write_table(w);
    w.put_blob(bits.finish());
    for (S v : s.outliers) w.put_scalar(v);
    return w.take();
}

template <std::floating_point S>
ResidualStream<S> decode_stream(ByteReader& r) {
    ResidualStream<S> s;
    const auto count = r.get_varint();
    const auto outliers = r.get_varint();
    require(outliers <= count, ErrorKind::format, "more outliers than points");
    const auto code = HuffmanCode::read_table(r);
    require(count == 0 || !code.empty(), ErrorKind::format, "missing Huffman table");
    const auto bits = r.get_blob();
    require(count <= bits.size() * 8, ErrorKind::format, "bitstream shorter than point count");
    s.codes.resize(static_cast<std::size_t>(count));
    BitReader in(bits);
    std::size_t zeros = 0;
    for (auto& c : s.codes) {
        c = code.decode(in);
        zeros += c == 0;
    }
    require(zeros == outliers, ErrorKind::format, "outlier count does not match code-0 entries");
    s.outliers.resize(r.checked_size(outliers, sizeof(S)));
    for (auto& v : s.outliers) v = r.get_scalar<S>();
    return s;
}

template <std::floating_point S>
ResidualStream<S> decode_stream(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto s = decode_stream<S>(r);
    require(r.at_end(), ErrorKind::format, "trailing bytes after residual chunk");
    return s;
}

}  // namespace graphcomp
