#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "graphcomp/common.hpp"

namespace graphcomp {

enum class Precision : std::uint8_t {
    f32 = 4,
    f64 = 8,
};

template <std::floating_point S>
constexpr Precision precision_of() {
    static_assert(sizeof(S) == 4 || sizeof(S) == 8, "only 32- and 64-bit floats are supported");
    return sizeof(S) == 4 ? Precision::f32 : Precision::f64;
}

inline std::size_t bytes_per_value(Precision p) { return static_cast<std::size_t>(p); }

inline Precision parse_precision(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw Error(ErrorKind::config, "precision must be f32 or f64, got '" + s + "'");
}

inline const char* to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

struct GridDims {
    std::size_t timestamps = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t plane() const { return rows * cols; }
    std::size_t count() const { return timestamps * rows * cols; }
    bool operator==(const GridDims&) const = default;
};

/// Parses "T,M,N".
inline GridDims parse_dims(const std::string& text) {
    GridDims d;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> d.timestamps >> c1 >> d.rows >> c2 >> d.cols) || c1 != ',' || c2 != ',' || !in.eof())
        throw Error(ErrorKind::config, "dims must look like T,M,N, got '" + text + "'");
    require(d.timestamps >= 1 && d.rows >= 1 && d.cols >= 1, ErrorKind::dimension, "all dims must be >= 1");
    return d;
}

template <std::floating_point S>
struct ValueRange {
    S min = 0;
    S max = 0;

    double width() const { return static_cast<double>(max) - static_cast<double>(min); }
    bool operator==(const ValueRange&) const = default;
};

template <std::floating_point S>
ValueRange<S> vrange(std::span<const S> values) {
    require(!values.empty(), ErrorKind::dimension, "vrange of empty data");
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

/// Relative bound and the absolute bound derived from it.
struct ErrorBound {
    double relative = 0;
    double absolute = 0;

    template <std::floating_point S>
    static ErrorBound from(double eps, const ValueRange<S>& range) {
        require(eps > 0 && std::isfinite(eps), ErrorKind::config, "error bound must be positive");
        return {eps, eps * range.width()};
    }
};

/// Single-timestamp slice, owning its values.
template <std::floating_point S>
struct Field2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<S> values;

    Field2D() = default;
    Field2D(std::size_t m, std::size_t n, std::vector<S> v) : rows(m), cols(n), values(std::move(v)) {
        require(values.size() == rows * cols, ErrorKind::dimension, "field length does not match rows*cols");
    }
    Field2D(std::size_t m, std::size_t n, S fill) : rows(m), cols(n), values(m * n, fill) {}

    std::size_t size() const { return values.size(); }
    S operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    S& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

/// T x M x N scalar field, timestamp-major then row-major. Immutable after construction.
template <std::floating_point S>
class TemporalGrid {
public:
    using value_type = S;

    TemporalGrid() = default;

    TemporalGrid(GridDims dims, std::vector<S> values) : dims_(dims), values_(std::move(values)) {
        require(dims_.timestamps >= 1 && dims_.rows >= 1 && dims_.cols >= 1, ErrorKind::dimension,
                "all dims must be >= 1");
        require(values_.size() == dims_.count(), ErrorKind::dimension,
                "expected " + std::to_string(dims_.count()) + " values, got " + std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]))
                throw Error(ErrorKind::invalid_value, "non-finite value at index " + std::to_string(i));
        }
        range_ = vrange<S>(values_);
    }

    const GridDims& dims() const { return dims_; }
    std::size_t timestamps() const { return dims_.timestamps; }
    std::size_t rows() const { return dims_.rows; }
    std::size_t cols() const { return dims_.cols; }
    std::size_t size() const { return values_.size(); }

    std::span<const S> values() const { return values_; }
    std::span<const S> frame(std::size_t t) const {
        return std::span<const S>(values_).subspan(t * dims_.plane(), dims_.plane());
    }
    Field2D<S> field(std::size_t t) const {
        auto f = frame(t);
        return Field2D<S>(dims_.rows, dims_.cols, std::vector<S>(f.begin(), f.end()));
    }

    const ValueRange<S>& range() const { return range_; }
    std::size_t raw_bytes() const { return values_.size() * sizeof(S); }

private:
    GridDims dims_{};
    std::vector<S> values_;
    ValueRange<S> range_{};
};

/// Optional sidecar "<file>.dims" holding "T M N f32|f64".
struct GridHeader {
    GridDims dims;
    Precision precision = Precision::f32;
};

inline std::optional<GridHeader> read_sidecar(const std::filesystem::path& data_path) {
    auto side = data_path;
    side += ".dims";
    std::ifstream in(side);
    if (!in) return std::nullopt;
    GridHeader h;
    std::string prec;
    if (!(in >> h.dims.timestamps >> h.dims.rows >> h.dims.cols >> prec))
        throw Error(ErrorKind::format, "malformed sidecar header " + side.string());
    h.precision = parse_precision(prec);
    return h;
}

inline void write_sidecar(const std::filesystem::path& data_path, const GridHeader& h) {
    auto side = data_path;
    side += ".dims";
    std::ofstream out(side);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + side.string());
    out << h.dims.timestamps << ' ' << h.dims.rows << ' ' << h.dims.cols << ' ' << to_string(h.precision) << '\n';
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::io, "short write to " + path.string());
}

/// Loads a headerless raw array. The element type must match the declared precision.
template <std::floating_point S>
TemporalGrid<S> load_grid(const std::filesystem::path& path, GridDims dims) {
    const auto bytes = read_file(path);
    const std::size_t expected = dims.count() * sizeof(S);
    require(bytes.size() == expected, ErrorKind::dimension,
            path.string() + " holds " + std::to_string(bytes.size()) + " bytes, dims need " +
                std::to_string(expected));
    std::vector<S> values(dims.count());
    std::memcpy(values.data(), bytes.data(), expected);
    return TemporalGrid<S>(dims, std::move(values));
}

template <std::floating_point S>
void store_grid(const std::filesystem::path& path, const TemporalGrid<S>& grid) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(grid.values().data());
    write_file(path, std::span<const std::uint8_t>(p, grid.raw_bytes()));
}

/// Deterministic smooth drifting field: a few travelling low-frequency waves, a global
/// oscillation and small Gaussian noise. All variation scales down as smoothness grows.
template <std::floating_point S>
TemporalGrid<S> synth_field(std::uint64_t seed, std::size_t T, std::size_t M, std::size_t N, double smoothness) {
    require(T >= 1 && M >= 1 && N >= 1, ErrorKind::dimension, "synth_field dims must be >= 1");
    require(smoothness > 0, ErrorKind::config, "smoothness must be positive");
    constexpr double two_pi = 6.283185307179586;
    constexpr int waves = 5;

    Rng rng(seed);
    struct Wave {
        double amp, kx, ky, omega, phase;
    };
    std::vector<Wave> ws;
    for (int k = 0; k < waves; ++k) {
        const double amp = rng.uniform(1.5, 5.0);
        const double wavelength = rng.uniform(24.0, 96.0) * smoothness;
        const double dir = rng.uniform(0.0, two_pi);
        const double period = rng.uniform(15.0, 60.0) * smoothness * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        ws.push_back({amp, two_pi / wavelength * std::cos(dir), two_pi / wavelength * std::sin(dir),
                      two_pi / period, rng.uniform(0.0, two_pi)});
    }
    const double global_amp = rng.uniform(20.0, 40.0);
    const double global_omega = two_pi / (rng.uniform(10.0, 20.0) * smoothness);
    const double global_phase = rng.uniform(0.0, two_pi);
    const double noise = 0.02 / smoothness;
    const double base = 280.0;

    std::vector<S> values(T * M * N);
    std::size_t i = 0;
    for (std::size_t t = 0; t < T; ++t) {
        const double td = static_cast<double>(t);
        const double g = global_amp * std::sin(global_omega * td + global_phase);
        for (std::size_t r = 0; r < M; ++r) {
            for (std::size_t c = 0; c < N; ++c) {
                double v = base + g;
                for (const auto& w : ws)
                    v += w.amp * std::sin(w.kx * static_cast<double>(c) + w.ky * static_cast<double>(r) +
                                          w.omega * td + w.phase);
                v += noise * rng.normal();
                values[i++] = static_cast<S>(v);
            }
        }
    }
    return TemporalGrid<S>({T, M, N}, std::move(values));
}

}  // namespace graphcomp
