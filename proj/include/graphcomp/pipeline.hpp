#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "graphcomp/autoencoder.hpp"
#include "graphcomp/container.hpp"
#include "graphcomp/graph.hpp"
#include "graphcomp/meta_select.hpp"
#include "graphcomp/residual.hpp"
#include "graphcomp/segmentation.hpp"

namespace graphcomp {

struct CompressConfig {
    double eps = 1e-2;
    std::size_t r_max = 10;
    std::size_t window = 500;
    SignalMode signal_mode = SignalMode::reference0;
    SegParams seg;
    ModelArch arch;
    TrainConfig spatial_train;
    TrainConfig temporal_train;
    std::uint32_t radius = 32768;
    Codec codec = Codec::deflate;
    LatentPrecision latent_precision = LatentPrecision::f32;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::optional<Bytes> model_in;  // serialized model; skips training when present

    void validate() const {
        require(eps > 0 && std::isfinite(eps), ErrorKind::config, "eps must be positive");
        require(r_max >= 1, ErrorKind::config, "rmax must be >= 1");
        require(window >= 1, ErrorKind::config, "window must be >= 1");
        require(radius >= 1 && radius < (1u << 30), ErrorKind::config, "quantizer radius out of range");
        require(threads >= 1, ErrorKind::config, "threads must be >= 1");
        seg.validate();
        arch.validate();
        spatial_train.validate();
        temporal_train.validate();
    }

    /// Small network and short training, for tests and quick runs.
    static CompressConfig compact() {
        CompressConfig c;
        c.arch.gcn_dims = {16, 16, 8};
        c.arch.conv_channels = {8, 8, 4};
        c.spatial_train.epochs = 10;
        c.spatial_train.learning_rate = 1e-2;
        c.temporal_train.epochs = 10;
        c.temporal_train.learning_rate = 1e-3;
        return c;
    }
};

struct Metrics {
    std::size_t raw_bytes = 0;
    std::size_t archive_bytes = 0;
    double ratio = 0;
    double bit_rate = 0;
    double psnr = 0;  // +inf when the data is reproduced exactly
    double rmse = 0;
    double max_abs_err = 0;
    double max_rel_err = 0;
    std::size_t worst_index = 0;
    std::vector<std::size_t> histogram;  // signed relative error over [-eps, eps]

    static constexpr std::size_t histogram_bins = 65;
};

/// Point-wise error statistics of `decoded` against `original`.
template <std::floating_point S>
Metrics compute_metrics(std::span<const S> original, std::span<const S> decoded, double range_width, double eps,
                        std::size_t archive_bytes) {
    require(original.size() == decoded.size() && !original.empty(), ErrorKind::dimension,
            "grids differ in size");
    Metrics m;
    m.raw_bytes = original.size() * sizeof(S);
    m.archive_bytes = archive_bytes;
    m.ratio = archive_bytes ? static_cast<double>(m.raw_bytes) / static_cast<double>(archive_bytes) : 0.0;
    m.bit_rate = 8.0 * static_cast<double>(archive_bytes) / static_cast<double>(original.size());
    m.histogram.assign(Metrics::histogram_bins, 0);
    double sq = 0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = static_cast<double>(decoded[i]) - static_cast<double>(original[i]);
        sq += d * d;
        if (std::abs(d) > m.max_abs_err) {
            m.max_abs_err = std::abs(d);
            m.worst_index = i;
        }
        const double rel = range_width > 0 ? d / range_width : (d == 0 ? 0.0 : std::copysign(INFINITY, d));
        m.max_rel_err = std::max(m.max_rel_err, std::abs(rel));
        const double pos = (rel + eps) / (2 * eps) * static_cast<double>(Metrics::histogram_bins);
        const auto bin = static_cast<long>(std::floor(std::clamp(pos, 0.0, static_cast<double>(Metrics::histogram_bins) - 0.5)));
        ++m.histogram[static_cast<std::size_t>(bin)];
    }
    m.rmse = std::sqrt(sq / static_cast<double>(original.size()));
    m.psnr = m.rmse == 0 ? std::numeric_limits<double>::infinity() : 20.0 * std::log10(range_width / m.rmse);
    return m;
}

/// Everything the compressor produced, including intermediate grids for analysis.
template <std::floating_point S>
struct CompressResult {
    Bytes archive;
    std::vector<S> prediction;      // autoencoder output before correction
    std::vector<S> reconstruction;  // what decompress() returns
    Metrics metrics;
    ComponentSizes sizes;
    std::vector<TAutoG<S>> models;  // one per window
    std::vector<EpochLog> spatial_logs, temporal_logs;
    std::size_t node_count = 0;  // summed over groups
    double seconds = 0;
};

namespace detail {

/// Per-window segmentation and features, shared by the autoencoder path and the baseline.
template <std::floating_point S>
struct WindowGraphs {
    WindowHeader header;
    std::vector<SegmentationMap> maps;
    std::vector<RegionGraph> graphs;
    std::vector<GroupFeatures> features;
};

template <std::floating_point S>
WindowGraphs<S> build_window_graphs(const TemporalGrid<S>& grid, TimeRange window, const CompressConfig& cfg) {
    WindowGraphs<S> w;
    w.header.range = window;
    const auto sig = build_signal(grid, cfg.signal_mode, window);
    auto plan = select_meta(sig, cfg.r_max);
    for (auto& g : plan.groups) {
        g.start += window.start;
        g.end += window.start;
    }
    for (const auto& g : plan.groups) {
        auto map = felzenszwalb(virtual_timestamp(grid, g), cfg.seg);
        w.graphs.push_back(build_graph(map));
        w.features.push_back(build_group_features(grid, g, map));
        w.maps.push_back(std::move(map));
        w.header.groups.push_back({g, w.features.back().standardization});
    }
    return w;
}

template <std::floating_point S>
struct WindowResult {
    WindowGraphs<S> graphs;
    TAutoG<S> model;
    std::vector<LatentBlock> latents;
    EpochLog spatial_log, temporal_log;
};

template <class S>
Mat<S> feature_matrix(const std::vector<double>& f) {
    Mat<S> m(static_cast<Eigen::Index>(f.size()), 1);
    for (std::size_t i = 0; i < f.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = static_cast<S>(f[i]);
    return m;
}

template <std::floating_point S>
WindowResult<S> encode_window(const TemporalGrid<S>& grid, TimeRange window, std::size_t window_index,
                              const CompressConfig& cfg) {
    WindowResult<S> out;
    out.graphs = build_window_graphs(grid, window, cfg);
    const auto& wg = out.graphs;

    std::vector<Mat<S>> dense;
    for (const auto& g : wg.graphs) dense.push_back(dense_adjacency<S>(g.node_count, g.edges));

    if (cfg.model_in) {
        out.model = deserialize_model<S>(*cfg.model_in);
    } else {
        out.model = TAutoG<S>::init(cfg.arch, cfg.seed + 0x9e3779b97f4a7c15ULL * window_index);
        std::vector<SpatialSample<S>> samples;
        for (std::size_t g = 0; g < wg.graphs.size(); ++g)
            for (const auto& f : wg.features[g].per_timestamp)
                samples.push_back({&wg.graphs[g].norm_adj, &dense[g], feature_matrix<S>(f)});
        out.spatial_log = train_spatial(samples, out.model.spatial, cfg.spatial_train);
    }

    auto embed = [&](std::size_t g) {
        std::vector<Mat<S>> h;
        for (const auto& f : wg.features[g].per_timestamp)
            h.push_back(gcn_forward(wg.graphs[g].norm_adj, feature_matrix<S>(f), out.model.spatial));
        return make_temporal_sample(h);
    };

    if (!cfg.model_in) {
        std::vector<TemporalSample<S>> samples;
        for (std::size_t g = 0; g < wg.graphs.size(); ++g) samples.push_back(embed(g));
        out.temporal_log = train_temporal(samples, out.model.temporal, cfg.temporal_train);
        round_weights_to_f32(out.model);
    }

    for (std::size_t g = 0; g < wg.graphs.size(); ++g) {
        const auto s = embed(g);
        const auto z = temporal_encode(out.model.temporal, s.sequence, s.nodes, s.length);
        out.latents.push_back(make_latent(z, s.nodes, s.length, cfg.latent_precision));
    }
    return out;
}

/// Paints decoded, destandardized region values over every timestamp of the window.
template <std::floating_point S>
void predict_window(const TAutoG<S>& model, const WindowHeader& header, const std::vector<SegmentationMap>& maps,
                    const std::vector<LatentBlock>& latents, std::size_t plane, std::span<S> out) {
    require(maps.size() == header.groups.size() && latents.size() == header.groups.size(), ErrorKind::format,
            "window sections disagree on group count");
    for (std::size_t g = 0; g < header.groups.size(); ++g) {
        const auto& grp = header.groups[g];
        require(latents[g].nodes == maps[g].region_count && latents[g].length == grp.range.length(),
                ErrorKind::format, "latent shape does not match its group");
        const auto feats = decode_features(model, latents[g]);
        for (std::size_t k = 0; k < feats.size(); ++k) {
            std::vector<S> region_value(feats[k].size());
            for (std::size_t v = 0; v < feats[k].size(); ++v)
                region_value[v] = static_cast<S>(grp.standardization.invert(feats[k][v]));
            const std::size_t t = grp.range.start + k - header.range.start;
            for (std::size_t i = 0; i < plane; ++i) out[t * plane + i] = region_value[maps[g].labels[i]];
        }
    }
}

template <class T, class F>
std::vector<T> parallel_map(std::size_t n, std::size_t threads, F&& f) {
    std::vector<T> out(n);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
        return out;
    }
    for (std::size_t base = 0; base < n; base += threads) {
        std::vector<std::future<T>> jobs;
        for (std::size_t i = base; i < std::min(n, base + threads); ++i)
            jobs.push_back(std::async(std::launch::async, [&f, i] { return f(i); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) out[base + i] = jobs[i].get();
    }
    return out;
}

}  // namespace detail

template <std::floating_point S>
CompressResult<S> compress(const TemporalGrid<S>& grid, const CompressConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const auto range = grid.range();
    const std::size_t plane = grid.dims().plane();

    Archive archive;
    auto& h = archive.header;
    h.dims = grid.dims();
    h.precision = precision_of<S>();
    h.codec = cfg.codec;
    h.latent_precision = cfg.latent_precision;
    h.signal_mode = cfg.signal_mode;
    h.eps = cfg.eps;
    h.vmin = static_cast<double>(range.min);
    h.vmax = static_cast<double>(range.max);
    h.window = static_cast<std::uint32_t>(cfg.window);
    h.r_max = static_cast<std::uint32_t>(cfg.r_max);
    h.radius = cfg.radius;
    h.seed = cfg.seed;
    h.seg = cfg.seg;

    CompressResult<S> result;
    if (range.width() == 0) {
        h.constant = true;
        result.prediction.assign(grid.size(), range.min);
        result.reconstruction = result.prediction;
    } else {
        const auto windows = plan_windows(grid.timestamps(), cfg.window);
        auto encoded = detail::parallel_map<detail::WindowResult<S>>(
            windows.size(), cfg.threads, [&](std::size_t i) { return detail::encode_window(grid, windows[i], i, cfg); });

        const Quantizer q{ErrorBound::from(cfg.eps, range).absolute, cfg.radius};
        ByteWriter segm, model, latent, resid;
        model.put_varint(encoded.size());
        result.prediction.resize(grid.size());
        result.reconstruction.resize(grid.size());
        for (std::size_t w = 0; w < encoded.size(); ++w) {
            auto& enc = encoded[w];
            h.windows.push_back(enc.graphs.header);
            for (const auto& m : enc.graphs.maps) segm.put_blob(serialize_labels(m));
            ByteWriter mw;
            write_decoder(mw, enc.model);
            model.put_blob(mw.bytes());
            for (const auto& l : enc.latents) write_latent(latent, l, cfg.latent_precision);

            const auto win = enc.graphs.header.range;
            const std::size_t offset = win.start * plane, count = win.length() * plane;
            std::span<S> pred(result.prediction.data() + offset, count);
            detail::predict_window(enc.model, enc.graphs.header, enc.graphs.maps, enc.latents, plane, pred);
            std::vector<S> recon;
            const auto stream = quantize_residuals<S>(grid.values().subspan(offset, count), pred, q, cfg.eps,
                                                      range.width(), &recon);
            std::copy(recon.begin(), recon.end(), result.reconstruction.begin() + static_cast<std::ptrdiff_t>(offset));
            resid.put_blob(encode_stream(stream));

            for (const auto& g : enc.graphs.graphs) result.node_count += g.node_count;
            result.spatial_logs.push_back(std::move(enc.spatial_log));
            result.temporal_logs.push_back(std::move(enc.temporal_log));
            result.models.push_back(std::move(enc.model));
        }
        archive.section(Section::segm) = segm.take();
        archive.section(Section::model) = model.take();
        archive.section(Section::latent) = latent.take();
        archive.section(Section::resid) = resid.take();

        for (std::size_t i = 0; i < grid.size(); ++i)
            if (!within_bound(grid.values()[i], result.reconstruction[i], cfg.eps, range.width()))
                throw Error(ErrorKind::bound_violation, "point " + std::to_string(i) + " exceeds the bound");
    }

    result.archive = write_archive(archive);
    result.sizes = component_sizes(result.archive);
    result.metrics = compute_metrics<S>(grid.values(), result.reconstruction, range.width(), cfg.eps,
                                        result.archive.size());
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

/// Decodes an archive whose stored precision is S.
template <std::floating_point S>
TemporalGrid<S> decompress_as(std::span<const std::uint8_t> bytes) {
    const Archive a = read_archive(bytes);
    const auto& h = a.header;
    require(h.precision == precision_of<S>(), ErrorKind::format, "archive precision does not match the request");
    const std::size_t plane = h.dims.plane();
    if (h.constant) return TemporalGrid<S>(h.dims, std::vector<S>(h.dims.count(), static_cast<S>(h.vmin)));

    ByteReader segm(a.section(Section::segm)), model(a.section(Section::model)), latent(a.section(Section::latent)),
        resid(a.section(Section::resid));
    require(model.get_varint() == h.windows.size(), ErrorKind::format, "model count does not match windows");
    const Quantizer q{h.eps * (h.vmax - h.vmin), h.radius};
    std::vector<S> out(h.dims.count());
    for (const auto& win : h.windows) {
        std::vector<SegmentationMap> maps;
        std::vector<LatentBlock> latents;
        for (std::size_t g = 0; g < win.groups.size(); ++g) {
            maps.push_back(deserialize_labels(segm.get_blob(), h.dims.rows, h.dims.cols));
            latents.push_back(read_latent(latent, h.latent_precision));
        }
        ByteReader mr(model.get_blob());
        const auto m = read_decoder<S>(mr);
        require(mr.at_end(), ErrorKind::format, "trailing bytes in model blob");

        const std::size_t offset = win.range.start * plane, count = win.range.length() * plane;
        std::vector<S> pred(count);
        detail::predict_window<S>(m, win, maps, latents, plane, pred);
        const auto stream = decode_stream<S>(resid.get_blob());
        const auto rec = correct<S>(pred, stream, q);
        std::copy(rec.begin(), rec.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    require(segm.at_end() && model.at_end() && latent.at_end() && resid.at_end(), ErrorKind::format,
            "trailing bytes in a section");
    return TemporalGrid<S>(h.dims, std::move(out));
}

using AnyGrid = std::variant<TemporalGrid<float>, TemporalGrid<double>>;

inline AnyGrid decompress(std::span<const std::uint8_t> bytes) {
    const auto p = parse_archive(bytes);
    if (p.header.precision == Precision::f32) return decompress_as<float>(bytes);
    return decompress_as<double>(bytes);
}

struct VerifyReport {
    Metrics metrics;
    bool pass = false;
    std::size_t worst_t = 0, worst_row = 0, worst_col = 0;
};

template <std::floating_point S>
VerifyReport verify(const TemporalGrid<S>& original, const TemporalGrid<S>& decoded, double eps,
                    std::size_t archive_bytes = 0) {
    require(original.dims() == decoded.dims(), ErrorKind::dimension, "grids differ in shape");
    VerifyReport r;
    const double width = original.range().width();
    r.metrics = compute_metrics<S>(original.values(), decoded.values(), width, eps, archive_bytes);
    r.pass = true;
    for (std::size_t i = 0; i < original.size() && r.pass; ++i) {
        if (width == 0)
            r.pass = original.values()[i] == decoded.values()[i];
        else
            r.pass = within_bound(original.values()[i], decoded.values()[i], eps, width);
    }
    const std::size_t plane = original.dims().plane();
    r.worst_t = r.metrics.worst_index / plane;
    r.worst_row = (r.metrics.worst_index % plane) / original.cols();
    r.worst_col = r.metrics.worst_index % original.cols();
    return r;
}

/// Ablation baseline: each region painted with its group-mean value, no autoencoder.
template <std::floating_point S>
std::vector<S> region_mean_prediction(const TemporalGrid<S>& grid, const CompressConfig& cfg) {
    const std::size_t plane = grid.dims().plane();
    std::vector<S> out(grid.size());
    for (const auto& window : plan_windows(grid.timestamps(), cfg.window)) {
        const auto wg = detail::build_window_graphs(grid, window, cfg);
        for (std::size_t g = 0; g < wg.maps.size(); ++g) {
            const auto& range = wg.header.groups[g].range;
            const auto means = region_means(virtual_timestamp(grid, range), wg.maps[g]);
            for (std::size_t t = range.start; t <= range.end; ++t)
                for (std::size_t i = 0; i < plane; ++i) out[t * plane + i] = static_cast<S>(means[wg.maps[g].labels[i]]);
        }
    }
    return out;
}

}  // namespace graphcomp
