#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "graphcomp/graph.hpp"

namespace graphcomp {

struct TrainConfig {
    std::size_t epochs = 300;
    double learning_rate = 1e-3;
    double lambda = 1e-4;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double time_budget_seconds = 0;  // 0 disables the wall-clock cap

    void validate() const {
        require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
        require(learning_rate >= 0 && std::isfinite(learning_rate), ErrorKind::config, "learning rate must be >= 0");
        require(lambda >= 0 && std::isfinite(lambda), ErrorKind::config, "lambda must be >= 0");
        require(batch_size >= 1, ErrorKind::config, "batch size must be >= 1");
    }
};

struct ModelArch {
    std::vector<std::size_t> gcn_dims{64, 128, 256};
    std::vector<std::size_t> conv_channels{64, 128, 256};
    std::size_t kernel = 3;
    std::size_t stride = 2;

    std::size_t embedding_dim() const { return gcn_dims.back(); }

    void validate() const {
        require(!gcn_dims.empty() && !conv_channels.empty(), ErrorKind::config, "architecture needs layers");
        for (auto d : gcn_dims) require(d >= 1, ErrorKind::config, "layer width must be >= 1");
        for (auto d : conv_channels) require(d >= 1, ErrorKind::config, "channel count must be >= 1");
        require(kernel >= 1 && kernel % 2 == 1, ErrorKind::config, "kernel size must be odd");
        require(stride >= 1 && stride <= kernel, ErrorKind::config, "stride must be in [1, kernel]");
    }
};

/// Glorot-uniform fill in ±sqrt(6 / (fan_in + fan_out)).
template <class Matrix>
void glorot_fill(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = static_cast<typename Matrix::Scalar>(rng.uniform(-limit, limit));
}

/// Spatial encoder weights shared by every timestamp, plus the linear feature head.
template <class S>
struct GcnWeights {
    std::vector<Mat<S>> layers;  // d_l x d_{l+1}
    Mat<S> head;                 // embedding_dim x 1
    Vec<S> head_bias;            // 1

    std::size_t embedding_dim() const { return static_cast<std::size_t>(layers.back().cols()); }

    static GcnWeights init(const ModelArch& arch, Rng& rng) {
        GcnWeights w;
        std::size_t in = 1;
        for (auto out : arch.gcn_dims) {
            Mat<S> m(in, out);
            glorot_fill(m, in, out, rng);
            w.layers.push_back(std::move(m));
            in = out;
        }
        w.head.resize(in, 1);
        glorot_fill(w.head, in, 1, rng);
        w.head_bias = Vec<S>::Zero(1);
        return w;
    }

    static GcnWeights zeros_like(const GcnWeights& o) {
        GcnWeights w;
        for (const auto& l : o.layers) w.layers.push_back(Mat<S>::Zero(l.rows(), l.cols()));
        w.head = Mat<S>::Zero(o.head.rows(), o.head.cols());
        w.head_bias = Vec<S>::Zero(o.head_bias.size());
        return w;
    }

    /// Calls f on every trainable tensor in a fixed order.
    template <class F>
    void for_each_tensor(F&& f) {
        for (auto& l : layers) f(l.data(), static_cast<std::size_t>(l.size()));
        f(head.data(), static_cast<std::size_t>(head.size()));
        f(head_bias.data(), static_cast<std::size_t>(head_bias.size()));
    }
};

template <class S>
struct GcnCache {
    std::vector<Mat<S>> propagated;  // Ã H^l
    std::vector<Mat<S>> pre;         // Ã H^l W^l
    std::vector<Mat<S>> hidden;      // H^l, hidden[0] = F
};

/// H^{l+1} = relu(Ã H^l W^l) for all but the last layer, which stays linear.
template <class S>
Mat<S> gcn_forward(const NormalizedAdjacency& adj, const Mat<S>& features, const GcnWeights<S>& w,
                   GcnCache<S>* cache = nullptr) {
    require(!w.layers.empty() && features.cols() == w.layers.front().rows(), ErrorKind::dimension,
            "feature width does not match the first GCN layer");
    Mat<S> h = features, p;
    if (cache) {
        cache->propagated.clear();
        cache->pre.clear();
        cache->hidden.assign(1, features);
    }
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        spmm(adj, h, p);
        Mat<S> z = p * w.layers[l];
        if (cache) {
            cache->propagated.push_back(p);
            cache->pre.push_back(z);
        }
        h = l + 1 < w.layers.size() ? Mat<S>(z.cwiseMax(S(0))) : z;
        if (cache) cache->hidden.push_back(h);
    }
    return h;
}

/// Â = H Hᵀ, assembled from the upper triangle so it is exactly symmetric.
template <class S>
Mat<S> adjacency_decode(const Mat<S>& h) {
    const Eigen::Index n = h.rows();
    Mat<S> a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) a(i, j) = a(j, i) = h.row(i).dot(h.row(j));
    return a;
}

template <class S>
Mat<S> feature_head(const Mat<S>& h, const GcnWeights<S>& w) {
    Mat<S> f = h * w.head;
    f.array() += w.head_bias(0);
    return f;
}

struct SpatialLoss {
    double adjacency = 0;  // off-diagonal MSE(Â, A)
    double feature = 0;    // MSE(F̂, F)
    double total() const { return adjacency + feature; }
};

/// Loss of one graph and, when grad is given, accumulates scale * dL/dW into it.
template <class S>
SpatialLoss spatial_loss(const NormalizedAdjacency& adj, const Mat<S>& adjacency, const Mat<S>& features,
                         const GcnWeights<S>& w, GcnWeights<S>* grad = nullptr, S scale = S(1)) {
    GcnCache<S> cache;
    const Mat<S> h = gcn_forward(adj, features, w, grad ? &cache : nullptr);
    const Eigen::Index n = h.rows();

    SpatialLoss loss;
    Mat<S> dh = Mat<S>::Zero(n, h.cols());
    if (n > 1) {
        // Large graphs: H Hᵀ through Eigen's GEMM; symmetry is not needed here.
        Mat<S> diff = h * h.transpose() - adjacency;
        diff.diagonal().setZero();
        const S denom = static_cast<S>(n) * static_cast<S>(n - 1);
        loss.adjacency = static_cast<double>(diff.squaredNorm() / denom);
        if (grad) dh.noalias() += (S(4) / denom) * (diff * h);
    }
    const Mat<S> fhat = feature_head(h, w);
    const Mat<S> fdiff = fhat - features;
    loss.feature = static_cast<double>(fdiff.squaredNorm() / static_cast<S>(fdiff.size()));
    if (!grad) return loss;

    const Mat<S> dfhat = (S(2) / static_cast<S>(fdiff.size())) * fdiff;
    grad->head.noalias() += scale * (h.transpose() * dfhat);
    grad->head_bias(0) += scale * dfhat.sum();
    dh.noalias() += dfhat * w.head.transpose();

    for (std::size_t l = w.layers.size(); l-- > 0;) {
        Mat<S> dz = dh;
        if (l + 1 < w.layers.size()) dz.array() *= (cache.pre[l].array() > S(0)).template cast<S>();
        grad->layers[l].noalias() += scale * (cache.propagated[l].transpose() * dz);
        if (l == 0) break;
        const Mat<S> dp = dz * w.layers[l].transpose();
        spmm(adj, dp, dh);  // Ã is symmetric
    }
    return loss;
}

/// One graph of the training set: a group's structure and one timestamp's features.
template <class S>
struct SpatialSample {
    const NormalizedAdjacency* adj = nullptr;
    const Mat<S>* adjacency = nullptr;
    Mat<S> features;  // |V| x 1
};

struct EpochLog {
    std::vector<double> loss;  // mean per-sample loss seen during each epoch
};

namespace detail {

inline bool budget_exceeded(const TrainConfig& cfg, std::chrono::steady_clock::time_point start) {
    if (cfg.time_budget_seconds <= 0) return false;
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
    return el.count() > cfg.time_budget_seconds;
}

template <class S>
void check_finite(double loss, std::size_t epoch, const char* stage) {
    if (!std::isfinite(loss))
        throw Error(ErrorKind::divergence, std::string(stage) + " loss became non-finite at epoch " +
                                               std::to_string(epoch) + " (lower the learning rate)");
}

}  // namespace detail

/// Mini-batch gradient descent over the window's timestamps: W <- W - η ∂L/∂W.
template <class S>
EpochLog train_spatial(const std::vector<SpatialSample<S>>& samples, GcnWeights<S>& w, const TrainConfig& cfg) {
    cfg.validate();
    require(!samples.empty(), ErrorKind::dimension, "empty training set");
    EpochLog log;
    const auto started = std::chrono::steady_clock::now();
    const S lr = static_cast<S>(cfg.learning_rate);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0;
        for (std::size_t b = 0; b < samples.size(); b += cfg.batch_size) {
            const std::size_t e = std::min(samples.size(), b + cfg.batch_size);
            auto grad = GcnWeights<S>::zeros_like(w);
            const S scale = S(1) / static_cast<S>(e - b);
            for (std::size_t i = b; i < e; ++i)
                epoch_loss += spatial_loss(*samples[i].adj, *samples[i].adjacency, samples[i].features, w, &grad, scale)
                                  .total();
            detail::check_finite<S>(epoch_loss, epoch, "spatial");
            std::vector<S*> dst;
            w.for_each_tensor([&](S* p, std::size_t) { dst.push_back(p); });
            std::size_t k = 0;
            grad.for_each_tensor([&](S* g, std::size_t n) {
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
