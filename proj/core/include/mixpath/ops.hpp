#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include "mixpath/tensor.hpp"

// Forward/backward kernels for the fixed layer set. Layout is NCHW
// throughout. Convolutions carry no bias term; a normalization layer always
// follows them and its shift parameter covers the role. All loops are
// single-threaded and run in a fixed order, so results are bit-identical
// for identical inputs.

namespace mixpath {

enum class BnMode { Train, Eval };

// Per-channel batch-norm state. Running statistics are kept in double so
// that scaled inputs produce exactly scaled statistics up to ~1e-15; the
// learnable parameters stay in the working scalar type.
template <typename S>
struct BnStateT {
    std::vector<S> gamma;
    std::vector<S> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double eps = 1e-5;
    double momentum = 0.1;

    BnStateT() = default;
    explicit BnStateT(int channels)
        : gamma(channels, S(1)), beta(channels, S(0)),
          running_mean(channels, 0.0), running_var(channels, 1.0) {}

    int channels() const { return static_cast<int>(gamma.size()); }

    void reset_running() {
        std::fill(running_mean.begin(), running_mean.end(), 0.0);
        std::fill(running_var.begin(), running_var.end(), 1.0);
    }
};

using BnState = BnStateT<float>;

namespace detail {
inline int conv_out_dim(int in, int pad, int k, int stride) {
    return (in + 2 * pad - k) / stride + 1;
}
} // namespace detail

// ---------------------------------------------------------------------------
// conv2d: input NCHW, weight OIKK

template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, int stride, int pad) {
    if (x.shape.size() != 4 || w.shape.size() != 4)
        throw DimensionError("conv2d expects 4-d input and weight");
    if (x.shape[1] != w.shape[1])
        throw DimensionError("conv2d channel mismatch: input " + x.shape_str() +
                             " vs weight " + w.shape_str());
    if (stride < 1 || pad < 0) throw DimensionError("conv2d: bad stride/padding");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int O = w.shape[0], K = w.shape[2], Kw = w.shape[3];
    const int Ho = detail::conv_out_dim(H, pad, K, stride);
    const int Wo = detail::conv_out_dim(W, pad, Kw, stride);
    if (Ho <= 0 || Wo <= 0) throw DimensionError("conv2d: empty output");

    TensorT<S> y({N, O, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    S acc = S(0);
                    for (int c = 0; c < C; ++c)
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = oh * stride - pad + kh;
                            if (ih < 0 || ih >= H) continue;
                            for (int kw = 0; kw < Kw; ++kw) {
                                const int iw = ow * stride - pad + kw;
                                if (iw < 0 || iw >= W) continue;
                                acc += x.at4(n, c, ih, iw) * w.at4(o, c, kh, kw);
                            }
                        }
                    y.at4(n, o, oh, ow) = acc;
                }
    return y;
}

// Accumulates into x.grad and w.grad (callers zero them between steps).
template <typename S>
void conv2d_backward(TensorT<S>& x, TensorT<S>& w, const TensorT<S>& dy, int stride, int pad) {
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int O = w.shape[0], K = w.shape[2], Kw = w.shape[3];
    const int Ho = dy.shape[2], Wo = dy.shape[3];
    x.ensure_grad();
    w.ensure_grad();
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    const S g = dy.at4(n, o, oh, ow);
                    for (int c = 0; c < C; ++c)
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = oh * stride - pad + kh;
                            if (ih < 0 || ih >= H) continue;
                            for (int kw = 0; kw < Kw; ++kw) {
                                const int iw = ow * stride - pad + kw;
                                if (iw < 0 || iw >= W) continue;
                                x.grad[x.idx4(n, c, ih, iw)] += g * w.at4(o, c, kh, kw);
                                w.grad[w.idx4(o, c, kh, kw)] += g * x.at4(n, c, ih, iw);
                            }
                        }
                }
}

// ---------------------------------------------------------------------------
// depthwise conv2d: weight C1KK, one filter per channel

template <typename S>
TensorT<S> depthwise_conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, int stride, int pad) {
    if (x.shape.size() != 4 || w.shape.size() != 4)
        throw DimensionError("depthwise_conv2d expects 4-d input and weight");
    if (x.shape[1] != w.shape[0] || w.shape[1] != 1)
        throw DimensionError("depthwise_conv2d channel mismatch: input " + x.shape_str() +
                             " vs weight " + w.shape_str());
    if (stride < 1 || pad < 0) throw DimensionError("depthwise_conv2d: bad stride/padding");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int K = w.shape[2], Kw = w.shape[3];
    const int Ho = detail::conv_out_dim(H, pad, K, stride);
    const int Wo = detail::conv_out_dim(W, pad, Kw, stride);
    if (Ho <= 0 || Wo <= 0) throw DimensionError("depthwise_conv2d: empty output");

    TensorT<S> y({N, C, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    S acc = S(0);
                    for (int kh = 0; kh < K; ++kh) {
                        const int ih = oh * stride - pad + kh;
                        if (ih < 0 || ih >= H) continue;
                        for (int kw = 0; kw < Kw; ++kw) {
                            const int iw = ow * stride - pad + kw;
                            if (iw < 0 || iw >= W) continue;
                            acc += x.at4(n, c, ih, iw) * w.at4(c, 0, kh, kw);
                        }
                    }
                    y.at4(n, c, oh, ow) = acc;
                }
    return y;
}

template <typename S>
void depthwise_conv2d_backward(TensorT<S>& x, TensorT<S>& w, const TensorT<S>& dy, int stride, int pad) {
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int K = w.shape[2], Kw = w.shape[3];
    const int Ho = dy.shape[2], Wo = dy.shape[3];
    x.ensure_grad();
    w.ensure_grad();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    const S g = dy.at4(n, c, oh, ow);
                    for (int kh = 0; kh < K; ++kh) {
                        const int ih = oh * stride - pad + kh;
                        if (ih < 0 || ih >= H) continue;
                        for (int kw = 0; kw < Kw; ++kw) {
                            const int iw = ow * stride - pad + kw;
                            if (iw < 0 || iw >= W) continue;
                            x.grad[x.idx4(n, c, ih, iw)] += g * w.at4(c, 0, kh, kw);
                            w.grad[w.idx4(c, 0, kh, kw)] += g * x.at4(n, c, ih, iw);
                        }
                    }
                }
}

// ---------------------------------------------------------------------------
// batch normalization over (N, H, W) per channel

// Cache of what the backward pass (and stat calibration) needs from a
// train-mode forward.
template <typename S>
struct BnCache {
    std::vector<double> mean;    // batch mean per channel
    std::vector<double> var;     // biased batch variance per channel
    std::vector<double> inv_std; // 1/sqrt(var + eps) per channel
};

// Train mode normalizes by batch statistics and moves the running stats by
// `momentum` toward them (biased variance, documented constant of the
// engine); eval mode normalizes by the running stats. Returns the output;
// fills `cache` when training.
template <typename S>
TensorT<S> batchnorm_forward(const TensorT<S>& x, BnStateT<S>& state, BnMode mode,
                             std::type_identity_t<BnCache<S>>* cache = nullptr,
                             bool update_running = true) {
    if (x.shape.size() != 4) throw DimensionError("batchnorm expects NCHW input");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (C != state.channels())
        throw DimensionError("batchnorm channel mismatch: input " + x.shape_str());
    if (mode == BnMode::Train && N < 2)
        throw DimensionError("batchnorm train mode needs batch size >= 2");

    TensorT<S> y(x.shape);
    const std::size_t spatial = static_cast<std::size_t>(H) * W;
    const double count = static_cast<double>(N) * spatial;

    for (int c = 0; c < C; ++c) {
        double mean, var;
        if (mode == BnMode::Train) {
            double sum = 0.0;
            for (int n = 0; n < N; ++n) {
                const S* p = x.data.data() + x.idx4(n, c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i) sum += static_cast<double>(p[i]);
            }
            mean = sum / count;
            double sq = 0.0;
            for (int n = 0; n < N; ++n) {
                const S* p = x.data.data() + x.idx4(n, c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i) {
                    const double d = static_cast<double>(p[i]) - mean;
                    sq += d * d;
                }
            }
            var = sq / count;
            if (update_running) {
                state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean;
                state.running_var[c]  = (1.0 - state.momentum) * state.running_var[c]  + state.momentum * var;
            }
        } else {
            mean = state.running_mean[c];
            var = state.running_var[c];
        }
        const double inv_std = 1.0 / std::sqrt(var + state.eps);
        const double g = static_cast<double>(state.gamma[c]);
        const double b = static_cast<double>(state.beta[c]);
        for (int n = 0; n < N; ++n) {
            const S* p = x.data.data() + x.idx4(n, c, 0, 0);
            S* q = y.data.data() + y.idx4(n, c, 0, 0);
            for (std::size_t i = 0; i < spatial; ++i)
                q[i] = static_cast<S>((static_cast<double>(p[i]) - mean) * inv_std * g + b);
        }
        if (cache) {
            if (cache->mean.size() != static_cast<std::size_t>(C)) {
                cache->mean.assign(C, 0.0);
                cache->var.assign(C, 0.0);
                cache->inv_std.assign(C, 0.0);
            }
            cache->mean[c] = mean;
            cache->var[c] = var;
            cache->inv_std[c] = inv_std;
        }
    }
    return y;
}

// Read-only variant: normalizes exactly like batchnorm_forward but never
// writes the running statistics, so it can run against shared frozen state.
template <typename S>
TensorT<S> batchnorm_forward_frozen(const TensorT<S>& x, const BnStateT<S>& state,
                                    BnMode mode,
                                    std::type_identity_t<BnCache<S>>* cache = nullptr) {
    return batchnorm_forward(x, const_cast<BnStateT<S>&>(state), mode, cache, false);
}

// Train-mode backward. Accumulates dgamma/dbeta into the state's grad
// vectors (owned by the caller) and input grads into x.grad.
template <typename S>
void batchnorm_backward(TensorT<S>& x, BnStateT<S>& state, const BnCache<S>& cache,
                        const TensorT<S>& dy, std::vector<S>& dgamma, std::vector<S>& dbeta) {
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t spatial = static_cast<std::size_t>(H) * W;
    const double count = static_cast<double>(N) * spatial;
    x.ensure_grad();
    if (dgamma.size() != static_cast<std::size_t>(C)) dgamma.assign(C, S(0));
    if (dbeta.size() != static_cast<std::size_t>(C)) dbeta.assign(C, S(0));

    for (int c = 0; c < C; ++c) {
        const double mean = cache.mean[c];
        const double inv_std = cache.inv_std[c];
        const double g = static_cast<double>(state.gamma[c]);
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < N; ++n) {
            const S* p = x.data.data() + x.idx4(n, c, 0, 0);
            const S* d = dy.data.data() + dy.idx4(n, c, 0, 0);
            for (std::size_t i = 0; i < spatial; ++i) {
                const double xhat = (static_cast<double>(p[i]) - mean) * inv_std;
                sum_dy += static_cast<double>(d[i]);
                sum_dy_xhat += static_cast<double>(d[i]) * xhat;
            }
        }
        dbeta[c] += static_cast<S>(sum_dy);
        dgamma[c] += static_cast<S>(sum_dy_xhat);
        const double k1 = sum_dy / count;
        const double k2 = sum_dy_xhat / count;
        for (int n = 0; n < N; ++n) {
            const S* p = x.data.data() + x.idx4(n, c, 0, 0);
            const S* d = dy.data.data() + dy.idx4(n, c, 0, 0);
            S* xg = x.grad.data() + x.idx4(n, c, 0, 0);
            for (std::size_t i = 0; i < spatial; ++i) {
                const double xhat = (static_cast<double>(p[i]) - mean) * inv_std;
                xg[i] += static_cast<S>(g * inv_std * (static_cast<double>(d[i]) - k1 - xhat * k2));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// linear: x [N,F] * w [F,O] + b [O]

template <typename S>
TensorT<S> linear_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    if (x.shape.size() != 2 || w.shape.size() != 2 || b.shape.size() != 1)
        throw DimensionError("linear expects x[N,F], w[F,O], b[O]");
    if (x.shape[1] != w.shape[0] || w.shape[1] != b.shape[0])
        throw DimensionError("linear shape mismatch: " + x.shape_str() + " vs " + w.shape_str());
    const int N = x.shape[0], F = x.shape[1], O = w.shape[1];
    TensorT<S> y({N, O});
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            S acc = b.data[o];
            for (int f = 0; f < F; ++f)
                acc += x.data[n * F + f] * w.data[f * O + o];
            y.data[n * O + o] = acc;
        }
    return y;
}

template <typename S>
void linear_backward(TensorT<S>& x, TensorT<S>& w, TensorT<S>& b, const TensorT<S>& dy) {
    const int N = x.shape[0], F = x.shape[1], O = w.shape[1];
    x.ensure_grad();
    w.ensure_grad();
    b.ensure_grad();
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            const S g = dy.data[n * O + o];
            b.grad[o] += g;
            for (int f = 0; f < F; ++f) {
                x.grad[n * F + f] += g * w.data[f * O + o];
                w.grad[f * O + o] += g * x.data[n * F + f];
            }
        }
}

// ---------------------------------------------------------------------------
// relu

template <typename S>
TensorT<S> relu_forward(const TensorT<S>& x) {
    TensorT<S> y = x;
    for (auto& v : y.data) v = v > S(0) ? v : S(0);
    return y;
}

template <typename S>
void relu_backward(TensorT<S>& x, const TensorT<S>& dy) {
    x.ensure_grad();
    for (std::size_t i = 0; i < x.data.size(); ++i)
        if (x.data[i] > S(0)) x.grad[i] += dy.data[i];
}

// ---------------------------------------------------------------------------
// global average pool: NCHW -> [N,C]

template <typename S>
TensorT<S> global_avg_pool_forward(const TensorT<S>& x) {
    if (x.shape.size() != 4) throw DimensionError("global_avg_pool expects NCHW input");
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const double inv = 1.0 / (static_cast<double>(H) * W);
    TensorT<S> y({N, C});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double sum = 0.0;
            const S* p = x.data.data() + x.idx4(n, c, 0, 0);
            for (int i = 0; i < H * W; ++i) sum += static_cast<double>(p[i]);
            y.data[n * C + c] = static_cast<S>(sum * inv);
        }
    return y;
}

template <typename S>
void global_avg_pool_backward(TensorT<S>& x, const TensorT<S>& dy) {
    const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const S inv = static_cast<S>(1.0 / (static_cast<double>(H) * W));
    x.ensure_grad();
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const S g = dy.data[n * C + c] * inv;
            S* xg = x.grad.data() + x.idx4(n, c, 0, 0);
            for (int i = 0; i < H * W; ++i) xg[i] += g;
        }
}

// ---------------------------------------------------------------------------
// softmax cross entropy, mean over the batch

template <typename S>
struct SoftmaxCeResult {
    double loss = 0.0;
    TensorT<S> probs; // softmax(logits), needed by backward
};

template <typename S>
SoftmaxCeResult<S> softmax_cross_entropy_forward(const TensorT<S>& logits,
                                                 const std::vector<int>& labels) {
    if (logits.shape.size() != 2) throw DimensionError("softmax_cross_entropy expects [N,K] logits");
    const int N = logits.shape[0], K = logits.shape[1];
    if (static_cast<int>(labels.size()) != N)
        throw DimensionError("softmax_cross_entropy label count mismatch");
    SoftmaxCeResult<S> out;
    out.probs = TensorT<S>({N, K});
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        if (labels[n] < 0 || labels[n] >= K)
            throw DimensionError("softmax_cross_entropy label out of range");
        const S* row = logits.data.data() + static_cast<std::size_t>(n) * K;
        double mx = static_cast<double>(row[0]);
        for (int k = 1; k < K; ++k) mx = std::max(mx, static_cast<double>(row[k]));
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(row[k]) - mx);
        const double log_denom = std::log(denom);
        for (int k = 0; k < K; ++k)
            out.probs.data[n * K + k] =
                static_cast<S>(std::exp(static_cast<double>(row[k]) - mx - log_denom));
        total += -(static_cast<double>(row[labels[n]]) - mx - log_denom);
    }
    out.loss = total / N;
    return out;
}

template <typename S>
void softmax_cross_entropy_backward(TensorT<S>& logits, const SoftmaxCeResult<S>& fwd,
                                    const std::vector<int>& labels) {
    const int N = logits.shape[0], K = logits.shape[1];
    logits.ensure_grad();
    const S inv_n = static_cast<S>(1.0 / N);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) {
            S g = fwd.probs.data[n * K + k];
            if (k == labels[n]) g -= S(1);
            logits.grad[n * K + k] += g * inv_n;
        }
}

} // namespace mixpath
