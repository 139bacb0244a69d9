#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "graphcomp/autoencoder.hpp"
#include "graphcomp/bytes.hpp"
#include "graphcomp/graph.hpp"
#include "graphcomp/meta_select.hpp"
#include "graphcomp/segmentation.hpp"

namespace graphcomp {

inline constexpr char archive_magic[8] = {'G', 'R', 'C', 'M', 'P', 'A', 'R', 'C'};
inline constexpr std::uint16_t archive_version = 1;

enum class Section : std::size_t { segm = 0, model = 1, latent = 2, resid = 3 };
inline constexpr std::size_t section_count = 4;
inline constexpr std::array<const char*, section_count> section_tags{"SEGM", "MODL", "LATN", "RESD"};

struct GroupHeader {
    TimeRange range;
    Standardization standardization;
    bool operator==(const GroupHeader&) const = default;
};

struct WindowHeader {
    TimeRange range;
    std::vector<GroupHeader> groups;
    bool operator==(const WindowHeader&) const = default;
};

struct ArchiveHeader {
    GridDims dims;
    Precision precision = Precision::f32;
    bool constant = false;
    Codec codec = Codec::deflate;
    LatentPrecision latent_precision = LatentPrecision::f32;
    SignalMode signal_mode = SignalMode::reference0;
    double eps = 0;
    double vmin = 0;
    double vmax = 0;
    std::uint32_t window = 0;
    std::uint32_t r_max = 0;
    std::uint32_t radius = 0;
    std::uint64_t seed = 0;
    SegParams seg;
    std::vector<WindowHeader> windows;

    bool operator==(const ArchiveHeader& o) const {
        return dims == o.dims && precision == o.precision && constant == o.constant && codec == o.codec &&
               latent_precision == o.latent_precision && signal_mode == o.signal_mode && eps == o.eps &&
               vmin == o.vmin && vmax == o.vmax && window == o.window && r_max == o.r_max && radius == o.radius &&
               seed == o.seed && seg.scale == o.seg.scale && seg.sigma == o.seg.sigma &&
               seg.min_size == o.seg.min_size && windows == o.windows;
    }
};

/// Header plus the four uncompressed section payloads.
struct Archive {
    ArchiveHeader header;
    std::array<Bytes, section_count> sections;

    Bytes& section(Section s) { return sections[static_cast<std::size_t>(s)]; }
    const Bytes& section(Section s) const { return sections[static_cast<std::size_t>(s)]; }
    bool operator==(const Archive&) const = default;
};

namespace detail {

inline Bytes encode_header(const ArchiveHeader& h) {
    ByteWriter w;
    w.put_u64(h.dims.timestamps);
    w.put_u32(static_cast<std::uint32_t>(h.dims.rows));
    w.put_u32(static_cast<std::uint32_t>(h.dims.cols));
    w.put_u8(static_cast<std::uint8_t>(h.precision));
    w.put_u8(h.constant ? 1 : 0);
    w.put_u8(static_cast<std::uint8_t>(h.codec));
    w.put_u8(static_cast<std::uint8_t>(h.latent_precision));
    w.put_u8(static_cast<std::uint8_t>(h.signal_mode));
    w.put_f64(h.eps);
    w.put_f64(h.vmin);
    w.put_f64(h.vmax);
    w.put_u32(h.window);
    w.put_u32(h.r_max);
    w.put_u32(h.radius);
    w.put_u64(h.seed);
    w.put_f64(h.seg.scale);
    w.put_f64(h.seg.sigma);
    w.put_u32(static_cast<std::uint32_t>(h.seg.min_size));
    w.put_u32(static_cast<std::uint32_t>(h.windows.size()));
    for (const auto& win : h.windows) {
        w.put_u64(win.range.start);
        w.put_u64(win.range.end);
        w.put_u32(static_cast<std::uint32_t>(win.groups.size()));
        for (const auto& g : win.groups) {
            w.put_u64(g.range.start);
            w.put_u64(g.range.end);
            w.put_f64(g.standardization.mean);
            w.put_f64(g.standardization.scale);
        }
    }
    return w.take();
}

inline ArchiveHeader decode_header(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    ArchiveHeader h;
    h.dims.timestamps = r.get_u64();
    h.dims.rows = r.get_u32();
    h.dims.cols = r.get_u32();
    const auto prec = r.get_u8();
    require(prec == 4 || prec == 8, ErrorKind::format, "unknown precision id");
    h.precision = static_cast<Precision>(prec);
    h.constant = r.get_u8() != 0;
    h.codec = codec_from_id(r.get_u8());
    const auto lat = r.get_u8();
    require(lat == 2 || lat == 4, ErrorKind::format, "unknown latent precision id");
    h.latent_precision = static_cast<LatentPrecision>(lat);
    const auto mode = r.get_u8();
    require(mode <= 1, ErrorKind::format, "unknown signal mode id");
    h.signal_mode = static_cast<SignalMode>(mode);
    h.eps = r.get_f64();
    h.vmin = r.get_f64();
    h.vmax = r.get_f64();
    h.window = r.get_u32();
    h.r_max = r.get_u32();
    h.radius = r.get_u32();
    h.seed = r.get_u64();
    h.seg.scale = r.get_f64();
    h.seg.sigma = r.get_f64();
    h.seg.min_size = r.get_u32();
    const auto windows = r.checked_size(r.get_u32(), 20);
    std::size_t expect = 0;
    for (std::size_t i = 0; i < windows; ++i) {
        WindowHeader win;
        win.range.start = r.get_u64();
        win.range.end = r.get_u64();
        require(win.range.start == expect && win.range.end >= win.range.start, ErrorKind::format,
                "windows do not tile the time axis");
        const auto groups = r.checked_size(r.get_u32(), 32);
        std::size_t g_expect = win.range.start;
        for (std::size_t k = 0; k < groups; ++k) {
            GroupHeader g;
            g.range.start = r.get_u64();
            g.range.end = r.get_u64();
            g.standardization.mean = r.get_f64();
            g.standardization.scale = r.get_f64();
            require(g.range.start == g_expect && g.range.end >= g.range.start && g.range.end <= win.range.end,
                    ErrorKind::format, "groups do not tile their window");
            g_expect = g.range.end + 1;
            win.groups.push_back(g);
        }
        require(g_expect == win.range.end + 1, ErrorKind::format, "groups do not tile their window");
        expect = win.range.end + 1;
        h.windows.push_back(std::move(win));
    }
    require(r.at_end(), ErrorKind::format, "trailing bytes in header");
    require(h.dims.timestamps >= 1 && h.dims.rows >= 1 && h.dims.cols >= 1, ErrorKind::format, "bad dims");
    require(h.constant || expect == h.dims.timestamps, ErrorKind::format, "windows do not cover the time axis");
    return h;
}

}  // namespace detail

/// magic | u16 version | u64 header length | header | u64 header checksum |
/// 4 x (tag[4] | u64 raw length | u64 stored length | u64 checksum of stored bytes | stored bytes)
inline Bytes write_archive(const Archive& a) {
    ByteWriter w;
    w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(archive_magic), 8));
    w.put_u16(archive_version);
    const Bytes header = detail::encode_header(a.header);
    w.put_u64(header.size());
    w.put_bytes(header);
    w.put_u64(checksum64(header));
    for (std::size_t s = 0; s < section_count; ++s) {
        const Bytes stored = lossless_compress(a.sections[s], a.header.codec);
        w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(section_tags[s]), 4));
        w.put_u64(a.sections[s].size());
        w.put_u64(stored.size());
        w.put_u64(checksum64(stored));
        w.put_bytes(stored);
    }
    return w.take();
}

struct SectionRecord {
    std::uint64_t raw_length = 0;
    std::uint64_t stored_length = 0;
    std::uint64_t checksum = 0;
    std::span<const std::uint8_t> stored;
};

struct ParsedArchive {
    ArchiveHeader header;
    std::size_t header_bytes = 0;  // everything except stored section payloads
    std::array<SectionRecord, section_count> sections;
};

/// Parses framing and validates every checksum, without inflating sections.
inline ParsedArchive parse_archive(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.get_bytes(8);
    require(std::memcmp(magic.data(), archive_magic, 8) == 0, ErrorKind::format, "bad magic, not an archive");
    const auto version = r.get_u16();
    require(version == archive_version, ErrorKind::format,
            "archive version " + std::to_string(version) + " is not supported");
    const auto header_len = r.checked_size(r.get_u64());
    const auto header = r.get_bytes(header_len);
    require(checksum64(header) == r.get_u64(), ErrorKind::checksum, "header checksum mismatch");
    ParsedArchive p;
    p.header = detail::decode_header(header);
    std::size_t payload = 0;
    for (std::size_t s = 0; s < section_count; ++s) {
        const auto tag = r.get_bytes(4);
        require(std::memcmp(tag.data(), section_tags[s], 4) == 0, ErrorKind::format,
                std::string("expected section ") + section_tags[s]);
        auto& rec = p.sections[s];
        rec.raw_length = r.get_u64();
        rec.stored_length = r.get_u64();
        rec.checksum = r.get_u64();
        rec.stored = r.get_bytes(r.checked_size(rec.stored_length));
        require(checksum64(rec.stored) == rec.checksum, ErrorKind::checksum,
                std::string("section ") + section_tags[s] + " checksum mismatch");
        payload += rec.stored.size();
    }
    require(r.at_end(), ErrorKind::format, "trailing bytes after last section");
    p.header_bytes = bytes.size() - payload;
    return p;
}

inline Archive read_archive(std::span<const std::uint8_t> bytes) {
    const auto p = parse_archive(bytes);
    Archive a;
    a.header = p.header;
    for (std::size_t s = 0; s < section_count; ++s)
        a.sections[s] = lossless_decompress(p.sections[s].stored, p.sections[s].raw_length, p.header.codec);
    return a;
}

struct ComponentSizes {
    std::size_t header = 0;
    std::size_t segm = 0;
    std::size_t model = 0;
    std::size_t latent = 0;
    std::size_t resid = 0;
    std::array<std::size_t, section_count> raw{};

    std::size_t total() const { return header + segm + model + latent + resid; }
};

inline ComponentSizes component_sizes(std::span<const std::uint8_t> bytes) {
    const auto p = parse_archive(bytes);
    ComponentSizes c;
    c.header = p.header_bytes;
    c.segm = p.sections[0].stored.size();
    c.model = p.sections[1].stored.size();
    c.latent = p.sections[2].stored.size();
    c.resid = p.sections[3].stored.size();
    for (std::size_t s = 0; s < section_count; ++s) c.raw[s] = p.sections[s].raw_length;
    return c;
}

}  // namespace graphcomp
