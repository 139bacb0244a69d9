#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "graphcomp/gcn.hpp"

namespace graphcomp {

/// Channels x (nodes * length); column v * length + t holds node v at time t.
template <class S>
using SeqMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// 1-D convolution along time, nodes acting as the batch.
///
/// Forward (strided) layers read input[t_out * stride + j - padding]; transposed
/// layers scatter into output[t_in * stride + j - padding]. Both store one
/// out x in matrix per kernel tap.
template <class S>
struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 2;
    bool transposed = false;
    bool relu = true;
    std::vector<SeqMat<S>> taps;
    Vec<S> bias;

    std::size_t padding() const { return (kernel - 1) / 2; }

    std::size_t output_length(std::size_t in_len) const {
        return (in_len + 2 * padding() - kernel) / stride + 1;
    }

    static ConvLayer make(std::size_t in, std::size_t out, std::size_t k, std::size_t s, bool transposed, bool relu,
                          Rng& rng) {
        ConvLayer c{in, out, k, s, transposed, relu, {}, Vec<S>::Zero(out)};
        for (std::size_t j = 0; j < k; ++j) {
            SeqMat<S> w(out, in);
            glorot_fill(w, in * k, out * k, rng);
            c.taps.push_back(std::move(w));
        }
        return c;
    }
};

template <class S>
struct TemporalConvWeights {
    std::vector<ConvLayer<S>> encoder;
    std::vector<ConvLayer<S>> decoder;

    std::size_t input_channels() const {
        return encoder.empty() ? decoder.back().out_channels : encoder.front().in_channels;
    }
    std::size_t latent_channels() const {
        return encoder.empty() ? decoder.front().in_channels : encoder.back().out_channels;
    }

    /// Encoder: input -> c_1 -> ... -> c_n (last linear). Decoder mirrors back to the input width.
    static TemporalConvWeights init(std::size_t input_channels, const ModelArch& arch, Rng& rng) {
        TemporalConvWeights w;
        std::size_t in = input_channels;
        for (std::size_t i = 0; i < arch.conv_channels.size(); ++i) {
            const bool last = i + 1 == arch.conv_channels.size();
            w.encoder.push_back(ConvLayer<S>::make(in, arch.conv_channels[i], arch.kernel, arch.stride, false, !last, rng));
            in = arch.conv_channels[i];
        }
        for (std::size_t i = arch.conv_channels.size(); i-- > 0;) {
            const std::size_t out = i == 0 ? input_channels : arch.conv_channels[i - 1];
            w.decoder.push_back(ConvLayer<S>::make(in, out, arch.kernel, arch.stride, true, i != 0, rng));
            in = out;
        }
        return w;
    }

    static TemporalConvWeights zeros_like(const TemporalConvWeights& o) {
        TemporalConvWeights w = o;
        w.for_each_tensor([](S* p, std::size_t n, bool) { std::fill(p, p + n, S(0)); });
        return w;
    }

    /// f(ptr, count, is_kernel) over every trainable tensor, encoder then decoder.
    template <class F>
    void for_each_tensor(F&& f) {
        for (auto* stack : {&encoder, &decoder})
            for (auto& layer : *stack) {
                for (auto& t : layer.taps) f(t.data(), static_cast<std::size_t>(t.size()), true);
                f(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()), false);
            }
    }

    /// Sequence lengths after each encoder layer, starting with the input length.
    std::vector<std::size_t> lengths(std::size_t input_length) const {
        // Decoder layers share kernel and stride with their encoder mirror.
        std::vector<std::size_t> out{input_length};
        for (const auto& l : encoder.empty() ? decoder : encoder) out.push_back(l.output_length(out.back()));
        return out;
    }

    double kernel_sq_norm() const {
        double s = 0;
        for (const auto* stack : {&encoder, &decoder})
            for (const auto& layer : *stack)
                for (const auto& t : layer.taps) s += static_cast<double>(t.squaredNorm());
        return s;
    }
};

namespace detail {

/// Gathers, for one tap, the input column each output column reads (or zero).
template <class S>
SeqMat<S> gather_tap(const SeqMat<S>& in, std::size_t nodes, std::size_t in_len, std::size_t out_len,
                     std::size_t stride, long offset) {
    SeqMat<S> x = SeqMat<S>::Zero(in.rows(), static_cast<Eigen::Index>(nodes * out_len));
    for (std::size_t v = 0; v < nodes; ++v)
        for (std::size_t t = 0; t < out_len; ++t) {
            const long src = static_cast<long>(t * stride) + offset;
            if (src >= 0 && src < static_cast<long>(in_len))
                x.col(static_cast<Eigen::Index>(v * out_len + t)) = in.col(static_cast<Eigen::Index>(v * in_len + src));
        }
    return x;
}

}  // namespace detail

/// Applies one layer. `out_len` is only used by transposed layers.
template <class S>
SeqMat<S> conv_forward(const ConvLayer<S>& layer, const SeqMat<S>& in, std::size_t nodes, std::size_t in_len,
                       std::size_t out_len, SeqMat<S>* pre_activation = nullptr) {
    require(static_cast<std::size_t>(in.rows()) == layer.in_channels &&
                static_cast<std::size_t>(in.cols()) == nodes * in_len,
            ErrorKind::dimension, "sequence shape does not match the conv layer");
    const long pad = static_cast<long>(layer.padding());
    SeqMat<S> out;
    if (!layer.transposed) {
        out_len = layer.output_length(in_len);
        out = SeqMat<S>::Zero(layer.out_channels, nodes * out_len);
        for (std::size_t j = 0; j < layer.kernel; ++j)
            out.noalias() += layer.taps[j] *
                             detail::gather_tap(in, nodes, in_len, out_len, layer.stride, static_cast<long>(j) - pad);
    } else {
        out = SeqMat<S>::Zero(layer.out_channels, nodes * out_len);
        for (std::size_t j = 0; j < layer.kernel; ++j) {
            const SeqMat<S> y = layer.taps[j] * in;
            for (std::size_t v = 0; v < nodes; ++v)
                for (std::size_t t = 0; t < in_len; ++t) {
                    const long dst = static_cast<long>(t * layer.stride + j) - pad;
                    if (dst >= 0 && dst < static_cast<long>(out_len))
                        out.col(static_cast<Eigen::Index>(v * out_len + dst)) +=
                            y.col(static_cast<Eigen::Index>(v * in_len + t));
                }
        }
    }
    out.colwise() += layer.bias;
    if (pre_activation) *pre_activation = out;
    if (layer.relu) out = out.cwiseMax(S(0));
    return out;
}

/// Backward of conv_forward given dL/d(output); accumulates weight gradients into grad.
template <class S>
SeqMat<S> conv_backward(const ConvLayer<S>& layer, const SeqMat<S>& in, const SeqMat<S>& pre, SeqMat<S> dout,
                        std::size_t nodes, std::size_t in_len, std::size_t out_len, ConvLayer<S>& grad) {
    if (layer.relu) dout.array() *= (pre.array() > S(0)).template cast<S>();
    grad.bias.noalias() += dout.rowwise().sum();
    const long pad = static_cast<long>(layer.padding());
    SeqMat<S> din = SeqMat<S>::Zero(in.rows(), in.cols());
    for (std::size_t j = 0; j < layer.kernel; ++j) {
        const long offset = static_cast<long>(j) - pad;
        if (!layer.transposed) {
            const SeqMat<S> x = detail::gather_tap(in, nodes, in_len, out_len, layer.stride, offset);
            grad.taps[j].noalias() += dout * x.transpose();
            const SeqMat<S> dx = layer.taps[j].transpose() * dout;
            for (std::size_t v = 0; v < nodes; ++v)
                for (std::size_t t = 0; t < out_len; ++t) {
                    const long src = static_cast<long>(t * layer.stride) + offset;
                    if (src >= 0 && src < static_cast<long>(in_len))
                        din.col(static_cast<Eigen::Index>(v * in_len + src)) +=
                            dx.col(static_cast<Eigen::Index>(v * out_len + t));
                }
        } else {
            // dy[v, t] = dout[v, t * stride + offset]
            const SeqMat<S> dy = detail::gather_tap(dout, nodes, out_len, in_len, layer.stride, offset);
            grad.taps[j].noalias() += dy * in.transpose();
            din.noalias() += layer.taps[j].transpose() * dy;
        }
    }
    return din;
}

template <class S>
struct TemporalCache {
    std::vector<SeqMat<S>> inputs;  // input of each layer, encoder then decoder
    std::vector<SeqMat<S>> pre;
    std::vector<std::size_t> in_lens, out_lens;
};

template <class S>
SeqMat<S> temporal_encode(const TemporalConvWeights<S>& w, const SeqMat<S>& x, std::size_t nodes, std::size_t length,
                          TemporalCache<S>* cache = nullptr) {
    SeqMat<S> h = x;
    std::size_t len = length;
    for (const auto& layer : w.encoder) {
        const std::size_t out_len = layer.output_length(len);
        SeqMat<S> pre;
        SeqMat<S> next = conv_forward(layer, h, nodes, len, out_len, cache ? &pre : nullptr);
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(std::move(pre));
            cache->in_lens.push_back(len);
            cache->out_lens.push_back(out_len);
        }
        h = std::move(next);
        len = out_len;
    }
    return h;
}

/// Restores the original length via the encoder's length chain.
template <class S>
SeqMat<S> temporal_decode(const TemporalConvWeights<S>& w, const SeqMat<S>& latent, std::size_t nodes,
                          std::size_t length, TemporalCache<S>* cache = nullptr) {
    const auto lens = w.lengths(length);
    require(static_cast<std::size_t>(latent.cols()) == nodes * lens.back() &&
                static_cast<std::size_t>(latent.rows()) == w.latent_channels(),
            ErrorKind::dimension, "latent shape does not match the temporal decoder");
    SeqMat<S> h = latent;
    for (std::size_t i = 0; i < w.decoder.size(); ++i) {
        const std::size_t in_len = lens[lens.size() - 1 - i], out_len = lens[lens.size() - 2 - i];
        SeqMat<S> pre;
        SeqMat<S> next = conv_forward(w.decoder[i], h, nodes, in_len, out_len, cache ? &pre : nullptr);
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(std::move(pre));
            cache->in_lens.push_back(in_len);
            cache->out_lens.push_back(out_len);
        }
        h = std::move(next);
    }
    return h;
}

struct TemporalLoss {
    double reconstruction = 0;  // summed squared error over all entries
    double regularization = 0;  // (λ/2) Σ kernel²
    double total() const { return reconstruction + regularization; }
};

/// Reconstruction loss of one group plus the L2 kernel penalty; accumulates gradients when asked.
template <class S>
TemporalLoss temporal_loss(const TemporalConvWeights<S>& w, const SeqMat<S>& x, std::size_t nodes, std::size_t length,
                           double lambda, TemporalConvWeights<S>* grad = nullptr) {
    TemporalCache<S> cache;
    const SeqMat<S> latent = temporal_encode(w, x, nodes, length, grad ? &cache : nullptr);
    const SeqMat<S> y = temporal_decode(w, latent, nodes, length, grad ? &cache : nullptr);
    const SeqMat<S> diff = y - x;
    TemporalLoss loss;
    loss.reconstruction = static_cast<double>(diff.squaredNorm());
    loss.regularization = 0.5 * lambda * w.kernel_sq_norm();
    if (!grad) return loss;

    SeqMat<S> d = S(2) * diff;
    const std::size_t layers = w.encoder.size() + w.decoder.size();
    for (std::size_t i = layers; i-- > 0;) {
        const bool enc = i < w.encoder.size();
        const auto& layer = enc ? w.encoder[i] : w.decoder[i - w.encoder.size()];
        auto& g = enc ? grad->encoder[i] : grad->decoder[i - w.encoder.size()];
        d = conv_backward(layer, cache.inputs[i], cache.pre[i], std::move(d), nodes, cache.in_lens[i],
                          cache.out_lens[i], g);
    }
    const S lam = static_cast<S>(lambda);
    for (auto* stack : {&grad->encoder, &grad->decoder}) {
        const auto& src = stack == &grad->encoder ? w.encoder : w.decoder;
        for (std::size_t l = 0; l < stack->size(); ++l)
            for (std::size_t j = 0; j < src[l].taps.size(); ++j) (*stack)[l].taps[j].noalias() += lam * src[l].taps[j];
    }
    return loss;
}

/// Embedding sequences of one group, ready for the temporal model.
template <class S>
struct TemporalSample {
    SeqMat<S> sequence;  // embedding_dim x (nodes * length)
    std::size_t nodes = 0;
    std::size_t length = 0;
};

/// Stacks per-timestamp embeddings H_t (|V| x d) into node-major sequences.
template <class S>
TemporalSample<S> make_temporal_sample(const std::vector<Mat<S>>& embeddings) {
    require(!embeddings.empty(), ErrorKind::dimension, "group without timestamps");
    TemporalSample<S> s;
    s.nodes = static_cast<std::size_t>(embeddings.front().rows());
    s.length = embeddings.size();
    s.sequence.resize(embeddings.front().cols(), static_cast<Eigen::Index>(s.nodes * s.length));
    for (std::size_t t = 0; t < s.length; ++t) {
        require(static_cast<std::size_t>(embeddings[t].rows()) == s.nodes, ErrorKind::dimension,
                "node count differs within a group");
        for (std::size_t v = 0; v < s.nodes; ++v)
            s.sequence.col(static_cast<Eigen::Index>(v * s.length + t)) = embeddings[t].row(static_cast<Eigen::Index>(v)).transpose();
    }
    return s;
}

/// Gradient descent on the reconstruction + L2 objective, one step per group.
template <class S>
EpochLog train_temporal(const std::vector<TemporalSample<S>>& samples, TemporalConvWeights<S>& w,
                        const TrainConfig& cfg) {
    cfg.validate();
    require(!samples.empty(), ErrorKind::dimension, "empty training set");
    EpochLog log;
    const auto started = std::chrono::steady_clock::now();
    const S lr = static_cast<S>(cfg.learning_rate);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0;
        for (const auto& s : samples) {
            auto grad = TemporalConvWeights<S>::zeros_like(w);
            epoch_loss += temporal_loss(w, s.sequence, s.nodes, s.length, cfg.lambda, &grad).total();
            detail::check_finite<S>(epoch_loss, epoch, "temporal");
            std::vector<S*> dst;
            w.for_each_tensor([&](S* p, std::size_t, bool) { dst.push_back(p); });
            std::size_t k = 0;
            grad.for_each_tensor([&](S* g, std::size_t n, bool) {
                S* p = dst[k++];
                for (std::size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
            });
        }
        log.loss.push_back(epoch_loss / static_cast<double>(samples.size()));
        if (detail::budget_exceeded(cfg, started)) break;
    }
    return log;
}

}  // namespace graphcomp
