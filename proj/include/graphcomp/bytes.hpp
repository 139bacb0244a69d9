#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "graphcomp/common.hpp"

namespace graphcomp {

static_assert(std::endian::native == std::endian::little, "byte streams assume a little-endian host");

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u16(std::uint16_t v) { put_raw(&v, 2); }
    void put_u32(std::uint32_t v) { put_raw(&v, 4); }
    void put_u64(std::uint64_t v) { put_raw(&v, 8); }
    void put_f32(float v) { put_raw(&v, 4); }
    void put_f64(double v) { put_raw(&v, 8); }

    void put_varint(std::uint64_t v) {
        while (v >= 0x80) {
            buf_.push_back(static_cast<std::uint8_t>(v | 0x80));
            v >>= 7;
        }
        buf_.push_back(static_cast<std::uint8_t>(v));
    }

    void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    /// Length-prefixed blob.
    void put_blob(std::span<const std::uint8_t> bytes) {
        put_varint(bytes.size());
        put_bytes(bytes);
    }

    template <class S>
    void put_scalar(S v) {
        put_raw(&v, sizeof(S));
    }

    std::size_t size() const { return buf_.size(); }
    Bytes& bytes() { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    void put_raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    Bytes buf_;
};

/// Bounds-checked reader; running off the end is a format error.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t get_u16() { return get_raw<std::uint16_t>(); }
    std::uint32_t get_u32() { return get_raw<std::uint32_t>(); }
    std::uint64_t get_u64() { return get_raw<std::uint64_t>(); }
    float get_f32() { return get_raw<float>(); }
    double get_f64() { return get_raw<double>(); }

    template <class S>
    S get_scalar() {
        return get_raw<S>();
    }

    std::uint64_t get_varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const std::uint8_t b = get_u8();
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
        }
        throw Error(ErrorKind::format, "varint too long");
    }

    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        need(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::span<const std::uint8_t> get_blob() { return get_bytes(checked_size(get_varint())); }

    /// Validates a count read from the stream against what is left.
    std::size_t checked_size(std::uint64_t n, std::size_t unit = 1) const {
        if (unit != 0 && n > remaining() / unit) throw Error(ErrorKind::format, "truncated stream");
        return static_cast<std::size_t>(n);
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (n > data_.size() - pos_) throw Error(ErrorKind::format, "truncated stream");
    }

    template <class T>
    T get_raw() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Lossless backends. The id byte is recorded in archives.
enum class Codec : std::uint8_t {
    store = 0,
    deflate = 1,
};

inline Codec codec_from_id(std::uint8_t id) {
    require(id <= 1, ErrorKind::format, "unknown codec id " + std::to_string(id));
    return static_cast<Codec>(id);
}

inline Bytes lossless_compress(std::span<const std::uint8_t> raw, Codec codec) {
    if (codec == Codec::store || raw.empty()) return Bytes(raw.begin(), raw.end());
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    Bytes out(bound);
    const int rc = compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9);
    require(rc == Z_OK, ErrorKind::io, "deflate failed");
    out.resize(bound);
    return out;
}

inline Bytes lossless_decompress(std::span<const std::uint8_t> stored, std::size_t raw_len, Codec codec) {
    if (codec == Codec::store || raw_len == 0) {
        require(stored.size() == raw_len, ErrorKind::format, "stored length mismatch");
        return Bytes(stored.begin(), stored.end());
    }
    Bytes out(raw_len);
    uLongf len = static_cast<uLongf>(raw_len);
    const int rc = uncompress(out.data(), &len, stored.data(), static_cast<uLong>(stored.size()));
    require(rc == Z_OK && len == raw_len, ErrorKind::format, "inflate failed");
    return out;
}

}  // namespace graphcomp
