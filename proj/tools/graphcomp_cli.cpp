#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "graphcomp/graphcomp.hpp"

using namespace graphcomp;
namespace fs = std::filesystem;

namespace {

enum Exit : int {
    ok = 0,
    usage = 1,
    io = 2,
    format = 3,
    bound = 4,
    divergence = 5,
    data = 6,
};

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::io: return io;
        case ErrorKind::format:
        case ErrorKind::checksum: return format;
        case ErrorKind::bound_violation: return bound;
        case ErrorKind::divergence: return divergence;
        case ErrorKind::dimension:
        case ErrorKind::invalid_value: return data;
        case ErrorKind::config: return usage;
    }
    return usage;
}

std::vector<std::size_t> parse_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stoul(item));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "expected a comma-separated list of integers, got '" + text + "'");
        }
    }
    require(!out.empty(), ErrorKind::config, "empty layer list");
    return out;
}

std::string fmt(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

struct Shape {
    std::string dims;
    std::string precision;

    GridHeader resolve(const fs::path& data) const {
        auto side = read_sidecar(data);
        GridHeader h;
        if (!dims.empty()) {
            h.dims = parse_dims(dims);
            h.precision = precision.empty() ? (side ? side->precision : Precision::f32) : parse_precision(precision);
        } else {
            require(side.has_value(), ErrorKind::config,
                    "no --dims given and no sidecar " + data.string() + ".dims found");
            h = *side;
            if (!precision.empty()) h.precision = parse_precision(precision);
        }
        return h;
    }
};

void print_metrics(const Metrics& m, bool csv, double eps, double seconds) {
    if (csv) {
        std::cout << "raw_bytes,archive_bytes,ratio,bit_rate,psnr,rmse,max_abs_err,max_rel_err,eps,seconds\n"
                  << m.raw_bytes << ',' << m.archive_bytes << ',' << fmt(m.ratio) << ',' << fmt(m.bit_rate) << ','
                  << fmt(m.psnr) << ',' << fmt(m.rmse) << ',' << fmt(m.max_abs_err) << ',' << fmt(m.max_rel_err)
                  << ',' << fmt(eps) << ',' << fmt(seconds) << '\n';
        return;
    }
    std::cout << "raw bytes      " << m.raw_bytes << '\n';
    if (m.archive_bytes) {
        std::cout << "archive bytes  " << m.archive_bytes << '\n'
                  << "ratio          " << fmt(m.ratio) << '\n'
                  << "bit rate       " << fmt(m.bit_rate) << " bits/value\n";
    }
    std::cout << "psnr           " << fmt(m.psnr) << " dB\n"
              << "rmse           " << fmt(m.rmse) << '\n'
              << "max abs error  " << fmt(m.max_abs_err) << '\n'
              << "max rel error  " << fmt(m.max_rel_err) << " (bound " << fmt(eps) << ")\n";
    if (seconds > 0) std::cout << "seconds        " << fmt(seconds) << '\n';
}

void print_histogram(const Metrics& m, double eps, bool csv) {
    const auto bins = Metrics::histogram_bins;
    if (csv) std::cout << "bin_lo,bin_hi,count\n";
    else std::cout << "relative error histogram\n";
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = -eps + 2 * eps * static_cast<double>(b) / static_cast<double>(bins);
        const double hi = -eps + 2 * eps * static_cast<double>(b + 1) / static_cast<double>(bins);
        if (csv) std::cout << fmt(lo) << ',' << fmt(hi) << ',' << m.histogram[b] << '\n';
        else if (m.histogram[b]) std::cout << "  [" << fmt(lo) << ", " << fmt(hi) << ")  " << m.histogram[b] << '\n';
    }
}

struct CompressOptions {
    std::string input, output;
    Shape shape;
    CompressConfig cfg;
    std::string gcn_dims = "64,128,256";
    std::string conv_channels = "64,128,256";
    std::size_t epochs = 300;
    double learning_rate = 1e-3;
    double time_budget = 0;
    std::string codec = "deflate";
    std::string latent = "f32";
    std::string signal = "reference0";
    std::string model_in, model_out;
    bool csv = false;
    bool compact = false;
};

template <std::floating_point S>
int run_compress(const CompressOptions& o, const GridHeader& shape) {
    const auto grid = load_grid<S>(o.input, shape.dims);
    CompressConfig cfg = o.cfg;
    auto res = compress(grid, cfg);
    write_file(o.output, res.archive);
    if (!o.model_out.empty()) {
        require(!res.models.empty(), ErrorKind::config, "constant input trains no model to save");
        write_file(o.model_out, serialize_model(res.models.front()));
    }
    print_metrics(res.metrics, o.csv, cfg.eps, res.seconds);
    if (!o.csv) {
        const auto& c = res.sizes;
        std::cout << "regions        " << res.node_count << '\n'
                  << "sections       header " << c.header << "  segm " << c.segm << "  model " << c.model
                  << "  latent " << c.latent << "  resid " << c.resid << '\n';
    }
    return ok;
}

int cmd_compress(CompressOptions o) {
    const auto shape = o.shape.resolve(o.input);
    if (o.compact) {
        const auto c = CompressConfig::compact();
        o.cfg.arch = c.arch;
        o.cfg.spatial_train = c.spatial_train;
        o.cfg.temporal_train = c.temporal_train;
    } else {
        o.cfg.arch.gcn_dims = parse_list(o.gcn_dims);
        o.cfg.arch.conv_channels = parse_list(o.conv_channels);
        for (auto* t : {&o.cfg.spatial_train, &o.cfg.temporal_train}) {
            t->epochs = o.epochs;
            t->learning_rate = o.learning_rate;
        }
    }
    for (auto* t : {&o.cfg.spatial_train, &o.cfg.temporal_train}) {
        t->time_budget_seconds = o.time_budget;
        t->lambda = o.cfg.spatial_train.lambda;
        t->seed = o.cfg.seed;
    }
    o.cfg.codec = o.codec == "store" ? Codec::store
                  : o.codec == "deflate"
                      ? Codec::deflate
                      : throw Error(ErrorKind::config, "codec must be store or deflate");
    o.cfg.latent_precision = o.latent == "f16" ? LatentPrecision::f16
                             : o.latent == "f32"
                                 ? LatentPrecision::f32
                                 : throw Error(ErrorKind::config, "latent precision must be f16 or f32");
    o.cfg.signal_mode = parse_signal_mode(o.signal);
    if (!o.model_in.empty()) o.cfg.model_in = read_file(o.model_in);
    if (shape.precision == Precision::f32) return run_compress<float>(o, shape);
    return run_compress<double>(o, shape);
}

int cmd_decompress(const std::string& input, const std::string& output) {
    const auto bytes = read_file(input);
    const auto grid = decompress(bytes);
    std::visit(
        [&](const auto& g) {
            store_grid(output, g);
            using S = typename std::decay_t<decltype(g)>::value_type;
            write_sidecar(output, {g.dims(), precision_of<S>()});
        },
        grid);
    return ok;
}

template <std::floating_point S>
int run_verify(const std::string& orig_path, const std::string& dec_path, const GridHeader& shape, double eps,
               std::size_t archive_bytes, bool csv, bool histogram) {
    const auto orig = load_grid<S>(orig_path, shape.dims);
    const auto dec = load_grid<S>(dec_path, shape.dims);
    const auto r = verify(orig, dec, eps, archive_bytes);
    print_metrics(r.metrics, csv, eps, 0);
    if (histogram) print_histogram(r.metrics, eps, csv);
    if (r.pass) {
        if (!csv) std::cout << "PASS\n";
        return ok;
    }
    const auto i = r.metrics.worst_index;
    std::cerr << "FAIL: worst point t=" << r.worst_t << " row=" << r.worst_row << " col=" << r.worst_col
              << " original=" << orig.values()[i] << " decoded=" << dec.values()[i]
              << " relative error=" << fmt(r.metrics.max_rel_err) << " > " << fmt(eps) << '\n';
    return bound;
}

int cmd_verify(const std::string& orig, const std::string& dec, const Shape& s, double eps,
               const std::string& archive, bool csv, bool histogram) {
    const auto shape = s.resolve(orig);
    const std::size_t archive_bytes = archive.empty() ? 0 : fs::file_size(archive);
    if (shape.precision == Precision::f32)
        return run_verify<float>(orig, dec, shape, eps, archive_bytes, csv, histogram);
    return run_verify<double>(orig, dec, shape, eps, archive_bytes, csv, histogram);
}

int cmd_stats(const std::string& input, bool csv) {
    const auto bytes = read_file(input);
    const auto p = parse_archive(bytes);
    const auto c = component_sizes(bytes);
    const auto& h = p.header;
    const std::size_t raw = h.dims.count() * bytes_per_value(h.precision);
    std::size_t groups = 0;
    for (const auto& w : h.windows) groups += w.groups.size();
    const double ratio = static_cast<double>(raw) / static_cast<double>(bytes.size());
    if (csv) {
        std::cout << "component,stored_bytes,raw_bytes\n"
                  << "header," << c.header << ",\n";
        for (std::size_t s = 0; s < section_count; ++s)
            std::cout << section_tags[s] << ','
                      << (s == 0 ? c.segm : s == 1 ? c.model : s == 2 ? c.latent : c.resid) << ',' << c.raw[s]
                      << '\n';
        std::cout << "total," << bytes.size() << ',' << raw << '\n';
        return ok;
    }
    std::cout << "dims           " << h.dims.timestamps << " x " << h.dims.rows << " x " << h.dims.cols << " "
              << to_string(h.precision) << '\n'
              << "eps            " << fmt(h.eps) << "  (value range " << fmt(h.vmin) << " .. " << fmt(h.vmax) << ")\n"
              << "windows        " << h.windows.size() << " of up to " << h.window << " timestamps, " << groups
              << " groups, rmax " << h.r_max << '\n'
              << "segmentation   scale " << fmt(h.seg.scale) << "  sigma " << fmt(h.seg.sigma) << "  min size "
              << h.seg.min_size << '\n'
              << "codec          " << (h.codec == Codec::deflate ? "deflate" : "store") << "  latent "
              << (h.latent_precision == LatentPrecision::f16 ? "f16" : "f32") << "  radius " << h.radius
              << "  seed " << h.seed << (h.constant ? "  constant" : "") << '\n'
              << "header         " << c.header << " bytes\n"
              << "SEGM           " << c.segm << " bytes (raw " << c.raw[0] << ")\n"
              << "MODL           " << c.model << " bytes (raw " << c.raw[1] << ")\n"
              << "LATN           " << c.latent << " bytes (raw " << c.raw[2] << ")\n"
              << "RESD           " << c.resid << " bytes (raw " << c.raw[3] << ")\n"
              << "total          " << bytes.size() << " bytes, ratio " << fmt(ratio) << ", "
              << fmt(8.0 * static_cast<double>(bytes.size()) / static_cast<double>(h.dims.count()))
              << " bits/value\n";
    return ok;
}

int cmd_synth(const std::string& output, const Shape& s, std::uint64_t seed, double smoothness) {
    require(!s.dims.empty(), ErrorKind::config, "synth needs --dims");
    const auto dims = parse_dims(s.dims);
    const auto prec = s.precision.empty() ? Precision::f32 : parse_precision(s.precision);
    if (prec == Precision::f32)
        store_grid(output, synth_field<float>(seed, dims.timestamps, dims.rows, dims.cols, smoothness));
    else
        store_grid(output, synth_field<double>(seed, dims.timestamps, dims.rows, dims.cols, smoothness));
    write_sidecar(output, {dims, prec});
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Error-bounded lossy compressor for gridded time series"};
    app.require_subcommand(1);

    CompressOptions co;
    auto* comp = app.add_subcommand("compress", "compress a raw float grid");
    comp->add_option("input", co.input, "raw little-endian grid")->required();
    comp->add_option("output", co.output, "archive path")->required();
    comp->add_option("--dims", co.shape.dims, "T,M,N (otherwise read from <input>.dims)");
    comp->add_option("--precision", co.shape.precision, "f32 or f64");
    comp->add_option("--eps", co.cfg.eps, "relative error bound")->capture_default_str();
    comp->add_option("--rmax", co.cfg.r_max, "maximum groups per window")->capture_default_str();
    comp->add_option("--window", co.cfg.window, "timestamps per window")->capture_default_str();
    comp->add_option("--seed", co.cfg.seed, "training seed")->capture_default_str();
    comp->add_option("--threads", co.cfg.threads, "windows trained concurrently")->capture_default_str();
    comp->add_option("--model-in", co.model_in, "reuse a saved model instead of training");
    comp->add_option("--model-out", co.model_out, "save the trained model of the first window");
    comp->add_option("--gcn-dims", co.gcn_dims, "GCN layer widths")->capture_default_str();
    comp->add_option("--conv-channels", co.conv_channels, "temporal conv channels")->capture_default_str();
    comp->add_option("--kernel", co.cfg.arch.kernel, "temporal kernel size")->capture_default_str();
    comp->add_option("--stride", co.cfg.arch.stride, "temporal stride")->capture_default_str();
    comp->add_option("--epochs", co.epochs, "training epochs")->capture_default_str();
    comp->add_option("--lr", co.learning_rate, "learning rate")->capture_default_str();
    comp->add_option("--lambda", co.cfg.spatial_train.lambda, "L2 weight on temporal kernels")->capture_default_str();
    comp->add_option("--batch", co.cfg.spatial_train.batch_size, "timestamps per GCN step")->capture_default_str();
    comp->add_option("--time-budget", co.time_budget, "seconds per training stage, 0 = unlimited")
        ->capture_default_str();
    comp->add_flag("--compact", co.compact, "small network and 10 epochs");
    comp->add_option("--seg-scale", co.cfg.seg.scale, "segmentation scale")->capture_default_str();
    comp->add_option("--seg-sigma", co.cfg.seg.sigma, "segmentation smoothing")->capture_default_str();
    comp->add_option("--seg-min-size", co.cfg.seg.min_size, "minimum region size")->capture_default_str();
    comp->add_option("--signal", co.signal, "reference0 or consecutive")->capture_default_str();
    comp->add_option("--radius", co.cfg.radius, "quantizer radius")->capture_default_str();
    comp->add_option("--codec", co.codec, "store or deflate")->capture_default_str();
    comp->add_option("--latent-precision", co.latent, "f16 or f32")->capture_default_str();
    comp->add_flag("--csv", co.csv, "print metrics as CSV");

    std::string din, dout;
    auto* decomp = app.add_subcommand("decompress", "restore a raw grid from an archive");
    decomp->add_option("input", din, "archive")->required();
    decomp->add_option("output", dout, "raw output; a .dims sidecar is written next to it")->required();

    std::string vorig, vdec, varchive;
    Shape vshape;
    double veps = 1e-2;
    bool vcsv = false, vhist = false;
    auto* ver = app.add_subcommand("verify", "check a decompressed grid against the original");
    ver->add_option("original", vorig)->required();
    ver->add_option("decoded", vdec)->required();
    ver->add_option("--eps", veps, "relative error bound")->capture_default_str();
    ver->add_option("--dims", vshape.dims, "T,M,N (otherwise read from <original>.dims)");
    ver->add_option("--precision", vshape.precision, "f32 or f64");
    ver->add_option("--archive", varchive, "archive, to report ratio and bit rate");
    ver->add_flag("--histogram", vhist, "print the signed relative error histogram");
    ver->add_flag("--csv", vcsv, "print metrics as CSV");

    std::string sin;
    bool scsv = false;
    auto* st = app.add_subcommand("stats", "component sizes and stored configuration");
    st->add_option("input", sin, "archive")->required();
    st->add_flag("--csv", scsv, "print as CSV");

    std::string yout;
    Shape yshape;
    std::uint64_t yseed = 1;
    double ysmooth = 1.0;
    auto* syn = app.add_subcommand("synth", "write a seeded synthetic grid");
    syn->add_option("output", yout, "raw output; a .dims sidecar is written next to it")->required();
    syn->add_option("--dims", yshape.dims, "T,M,N")->required();
    syn->add_option("--precision", yshape.precision, "f32 or f64");
    syn->add_option("--seed", yseed)->capture_default_str();
    syn->add_option("--smoothness", ysmooth, "larger is smoother")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (*comp) return cmd_compress(co);
        if (*decomp) return cmd_decompress(din, dout);
        if (*ver) return cmd_verify(vorig, vdec, vshape, veps, varchive, vcsv, vhist);
        if (*st) return cmd_stats(sin, scsv);
        if (*syn) return cmd_synth(yout, yshape, yseed, ysmooth);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    }
    return usage;
}
