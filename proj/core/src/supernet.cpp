#include "mixpath/supernet.hpp"

#include "mixpath/optim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace mixpath {

namespace {

int conv_out(int in, int k, int stride) {
    const int pad = k / 2;
    return (in + 2 * pad - k) / stride + 1;
}

int mid_channels(const LayerSpec& layer, int c_in) {
    return std::max(1, static_cast<int>(std::lround(layer.paths[0].expansion * c_in)));
}

Tensor grad_of(const Tensor& t) {
    Tensor g(t.shape);
    if (!t.grad.empty()) g.data = t.grad;
    return g;
}

Tensor path_forward(const Tensor& x, const PathSpec& p, const Tensor& w) {
    if (p.kind == PathKind::Depthwise)
        return depthwise_conv2d_forward(x, w, 1, p.kernel / 2);
    return conv2d_forward(x, w, 1, p.kernel / 2);
}

void path_backward(Tensor& x, const PathSpec& p, Tensor& w, const Tensor& dy) {
    if (p.kind == PathKind::Depthwise)
        depthwise_conv2d_backward(x, w, dy, 1, p.kernel / 2);
    else
        conv2d_backward(x, w, dy, 1, p.kernel / 2);
}

struct BlockActs {
    Tensor x, e, eb, er;
    BnCache<float> e_cache;
    std::vector<int> active;
    std::vector<Tensor> p, pb, pr;
    std::vector<BnCache<float>> p_cache;
    Tensor s, pre;
    std::uint32_t key = 0;
    BnCache<float> sbn_cache;
    Tensor out_bn;
};

struct ForwardActs {
    Tensor stem_in, stem_out, stem_bn_out, stem_relu;
    BnCache<float> stem_cache;
    std::vector<BlockActs> blocks;
    Tensor final_feat, pooled, logits;
};

Tensor block_train_forward(Block& blk, const SearchSpaceSpec& spec, int block_index,
                           const Tensor& x, std::uint32_t bits, BlockActs& a) {
    const auto& layer = spec.layers[block_index];
    a.x = x;
    a.e = conv2d_forward(a.x, blk.expand.w, 1, 0);
    a.eb = batchnorm_forward(a.e, blk.expand_bn.bn, BnMode::Train, &a.e_cache);
    a.er = relu_forward(a.eb);

    for (int i = 0; i < layer.n(); ++i) {
        if (!(bits & (1u << i))) continue;
        a.active.push_back(i);
        a.p.push_back(path_forward(a.er, layer.paths[i], blk.paths[i].w));
        a.p_cache.emplace_back();
        a.pb.push_back(
            batchnorm_forward(a.p.back(), blk.path_bn[i].bn, BnMode::Train, &a.p_cache.back()));
        a.pr.push_back(relu_forward(a.pb.back()));
    }

    a.s = a.pr[0];
    for (std::size_t k = 1; k < a.pr.size(); ++k)
        for (std::size_t j = 0; j < a.s.data.size(); ++j) a.s.data[j] += a.pr[k].data[j];

    a.pre = spec.aggregation == Aggregation::SumProj
                ? conv2d_forward(a.s, blk.proj.w, 1, 0)
                : a.s;
    a.key = sbn_key(spec.sbn_mode, bits, spec.m);
    a.out_bn = batchnorm_forward(a.pre, blk.sbn.at(a.key).bn, BnMode::Train, &a.sbn_cache);

    if (!blk.use_residual) return a.out_bn;
    Tensor out = a.out_bn;
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += a.x.data[j];
    return out;
}

Tensor block_backward(Block& blk, const SearchSpaceSpec& spec, int block_index,
                      BlockActs& a, const Tensor& dout) {
    const auto& layer = spec.layers[block_index];
    auto& bank = blk.sbn.at(a.key);
    a.pre.ensure_grad();
    batchnorm_backward(a.pre, bank.bn, a.sbn_cache, dout, bank.dgamma, bank.dbeta);

    Tensor ds;
    if (spec.aggregation == Aggregation::SumProj) {
        a.s.ensure_grad();
        blk.proj.w.ensure_grad();
        conv2d_backward(a.s, blk.proj.w, grad_of(a.pre), 1, 0);
        ds = grad_of(a.s);
    } else {
        ds = grad_of(a.pre);
    }

    a.er.ensure_grad();
    for (std::size_t idx = 0; idx < a.active.size(); ++idx) {
        const int i = a.active[idx];
        a.pb[idx].ensure_grad();
        relu_backward(a.pb[idx], ds); // the sum routes ds to every active path
        a.p[idx].ensure_grad();
        batchnorm_backward(a.p[idx], blk.path_bn[i].bn, a.p_cache[idx], grad_of(a.pb[idx]),
                           blk.path_bn[i].dgamma, blk.path_bn[i].dbeta);
        blk.paths[i].w.ensure_grad();
        path_backward(a.er, layer.paths[i], blk.paths[i].w, grad_of(a.p[idx]));
    }

    a.eb.ensure_grad();
    relu_backward(a.eb, grad_of(a.er));
    a.e.ensure_grad();
    batchnorm_backward(a.e, blk.expand_bn.bn, a.e_cache, grad_of(a.eb),
                       blk.expand_bn.dgamma, blk.expand_bn.dbeta);
    a.x.ensure_grad();
    blk.expand.w.ensure_grad();
    conv2d_backward(a.x, blk.expand.w, grad_of(a.e), 1, 0);

    Tensor dx = grad_of(a.x);
    if (blk.use_residual)
        for (std::size_t j = 0; j < dx.data.size(); ++j) dx.data[j] += dout.data[j];
    return dx;
}

Tensor train_forward(Supernet& net, const ArchMask& mask, const Tensor& images,
                     ForwardActs& acts) {
    acts.stem_in = images;
    acts.stem_out = conv2d_forward(acts.stem_in, net.stem.w, net.spec.stem_stride,
                                   net.spec.stem_kernel / 2);
    acts.stem_bn_out =
        batchnorm_forward(acts.stem_out, net.stem_bn.bn, BnMode::Train, &acts.stem_cache);
    acts.stem_relu = relu_forward(acts.stem_bn_out);

    Tensor cur = acts.stem_relu;
    acts.blocks.resize(net.blocks.size());
    for (std::size_t b = 0; b < net.blocks.size(); ++b)
        cur = block_train_forward(net.blocks[b], net.spec, static_cast<int>(b), cur,
                                  mask.layers[b], acts.blocks[b]);
    acts.final_feat = cur;
    acts.pooled = global_avg_pool_forward(acts.final_feat);
    acts.logits = linear_forward(acts.pooled, net.head_w.w, net.head_b.w);
    return acts.logits;
}

void train_backward(Supernet& net, const ArchMask& mask, ForwardActs& acts,
                    const SoftmaxCeResult<float>& ce, const std::vector<int>& labels) {
    acts.logits.ensure_grad();
    softmax_cross_entropy_backward(acts.logits, ce, labels);
    acts.pooled.ensure_grad();
    net.head_w.w.ensure_grad();
    net.head_b.w.ensure_grad();
    linear_backward(acts.pooled, net.head_w.w, net.head_b.w, grad_of(acts.logits));
    acts.final_feat.ensure_grad();
    global_avg_pool_backward(acts.final_feat, grad_of(acts.pooled));

    Tensor dcur = grad_of(acts.final_feat);
    for (int b = static_cast<int>(net.blocks.size()) - 1; b >= 0; --b)
        dcur = block_backward(net.blocks[b], net.spec, b, acts.blocks[b], dcur);

    acts.stem_bn_out.ensure_grad();
    relu_backward(acts.stem_bn_out, dcur);
    acts.stem_out.ensure_grad();
    batchnorm_backward(acts.stem_out, net.stem_bn.bn, acts.stem_cache,
                       grad_of(acts.stem_bn_out), net.stem_bn.dgamma, net.stem_bn.dbeta);
    acts.stem_in.ensure_grad();
    net.stem.w.ensure_grad();
    conv2d_backward(acts.stem_in, net.stem.w, grad_of(acts.stem_out),
                    net.spec.stem_stride, net.spec.stem_kernel / 2);
}

void zero_all_grads(Supernet& net) {
    auto zero_param = [](ParamTensor& p) {
        p.w.ensure_grad();
        p.w.zero_grad();
    };
    zero_param(net.stem);
    net.stem_bn.zero_grad();
    for (auto& blk : net.blocks) {
        zero_param(blk.expand);
        blk.expand_bn.zero_grad();
        for (auto& p : blk.paths) zero_param(p);
        for (auto& b : blk.path_bn) b.zero_grad();
        if (!blk.proj.w.data.empty()) zero_param(blk.proj);
        for (auto& [key, b] : blk.sbn) b.zero_grad();
    }
    zero_param(net.head_w);
    zero_param(net.head_b);
}

void update_touched(Supernet& net, const ArchMask& mask, double lr,
                    const TrainHyper& hyper) {
    auto step_param = [&](ParamTensor& p) {
        sgd_step(p.w.data, p.w.grad, p.vel, lr, hyper.momentum, hyper.weight_decay);
    };
    auto step_bn = [&](TrainableBn& b) {
        sgd_step(b.bn.gamma, b.dgamma, b.vgamma, lr, hyper.momentum, hyper.weight_decay);
        sgd_step(b.bn.beta, b.dbeta, b.vbeta, lr, hyper.momentum, hyper.weight_decay);
    };
    step_param(net.stem);
    step_bn(net.stem_bn);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        auto& blk = net.blocks[b];
        const std::uint32_t bits = mask.layers[b];
        step_param(blk.expand);
        step_bn(blk.expand_bn);
        for (int i = 0; i < static_cast<int>(blk.paths.size()); ++i) {
            if (!(bits & (1u << i))) continue;
            step_param(blk.paths[i]);
            step_bn(blk.path_bn[i]);
        }
        if (net.spec.aggregation == Aggregation::SumProj) step_param(blk.proj);
        step_bn(blk.sbn.at(sbn_key(net.spec.sbn_mode, bits, net.spec.m)));
    }
    step_param(net.head_w);
    step_param(net.head_b);
}

// shared skeleton for eval-mode and calibration-mode forwards
struct CalibAccum {
    std::vector<double> mean_sum, var_sum;
    int count = 0;
};

struct FrozenCtx {
    const BnSet* overrides = nullptr;           // eval: calibrated replacements
    std::map<std::string, CalibAccum>* accum = nullptr; // calib: stat sink
    int capture_block = -1;
    Tensor* captured_pre = nullptr;
    Tensor* captured_post = nullptr;
};

Tensor apply_bn_frozen(const Tensor& x, const BnState& own, const std::string& name,
                       FrozenCtx& ctx) {
    if (ctx.accum) {
        // calibration pass: normalize by this batch's own statistics and
        // record them
        BnCache<float> cache;
        Tensor y = batchnorm_forward_frozen(x, own, BnMode::Train, &cache);
        auto& acc = (*ctx.accum)[name];
        if (acc.mean_sum.empty()) {
            acc.mean_sum.assign(own.channels(), 0.0);
            acc.var_sum.assign(own.channels(), 0.0);
        }
        for (int c = 0; c < own.channels(); ++c) {
            acc.mean_sum[c] += cache.mean[c];
            acc.var_sum[c] += cache.var[c];
        }
        acc.count += 1;
        return y;
    }
    const BnState* state = &own;
    if (ctx.overrides) {
        auto it = ctx.overrides->find(name);
        if (it != ctx.overrides->end()) state = &it->second;
    }
    return batchnorm_forward_frozen(x, *state, BnMode::Eval);
}

Tensor frozen_forward(const Supernet& net, const ArchMask& mask, const Tensor& images,
                      FrozenCtx& ctx) {
    if (!mask_valid(net.spec, mask))
        throw std::invalid_argument("forward_submodel: mask does not fit the space: " +
                                    mask_to_string(mask));
    Tensor cur = conv2d_forward(images, net.stem.w, net.spec.stem_stride,
                                net.spec.stem_kernel / 2);
    cur = apply_bn_frozen(cur, net.stem_bn.bn, stem_bn_name(), ctx);
    cur = relu_forward(cur);

    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const auto& blk = net.blocks[b];
        const auto& layer = net.spec.layers[b];
        const std::uint32_t bits = mask.layers[b];
        const int bi = static_cast<int>(b);

        Tensor e = conv2d_forward(cur, blk.expand.w, 1, 0);
        e = apply_bn_frozen(e, blk.expand_bn.bn, expand_bn_name(bi), ctx);
        e = relu_forward(e);

        Tensor s;
        bool first = true;
        for (int i = 0; i < layer.n(); ++i) {
            if (!(bits & (1u << i))) continue;
            Tensor p = path_forward(e, layer.paths[i], blk.paths[i].w);
            p = apply_bn_frozen(p, blk.path_bn[i].bn, path_bn_name(bi, i), ctx);
            p = relu_forward(p);
            if (first) {
                s = std::move(p);
                first = false;
            } else {
                for (std::size_t j = 0; j < s.data.size(); ++j) s.data[j] += p.data[j];
            }
        }

        Tensor pre = net.spec.aggregation == Aggregation::SumProj
                         ? conv2d_forward(s, blk.proj.w, 1, 0)
                         : std::move(s);
        const std::uint32_t key = sbn_key(net.spec.sbn_mode, bits, net.spec.m);
        if (bi == ctx.capture_block && ctx.captured_pre) *ctx.captured_pre = pre;
        Tensor out = apply_bn_frozen(pre, blk.sbn.at(key).bn, sbn_name(bi, key), ctx);
        if (bi == ctx.capture_block && ctx.captured_post) *ctx.captured_post = out;
        if (blk.use_residual)
            for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] += cur.data[j];
        cur = std::move(out);
    }
    cur = global_avg_pool_forward(cur);
    return linear_forward(cur, net.head_w.w, net.head_b.w);
}

} // namespace

std::string stem_conv_name() { return "stem.conv.w"; }
std::string stem_bn_name() { return "stem.bn"; }
std::string expand_name(int block) { return "block" + std::to_string(block) + ".expand.w"; }
std::string expand_bn_name(int block) {
    return "block" + std::to_string(block) + ".expand.bn";
}
std::string path_name(int block, int path) {
    return "block" + std::to_string(block) + ".path" + std::to_string(path) + ".w";
}
std::string path_bn_name(int block, int path) {
    return "block" + std::to_string(block) + ".path" + std::to_string(path) + ".bn";
}
std::string proj_name(int block) { return "block" + std::to_string(block) + ".proj.w"; }
std::string sbn_name(int block, std::uint32_t key) {
    return "block" + std::to_string(block) + ".sbn." + std::to_string(key);
}

Supernet build_supernet(const SearchSpaceSpec& spec, const Rng& rng) {
    validate(spec);
    Supernet net;
    net.spec = spec;
    net.feat_hw = conv_out(spec.image_hw, spec.stem_kernel, spec.stem_stride);
    if (net.feat_hw < 1) throw std::invalid_argument("stem reduces the image to nothing");

    Rng init = rng.split("init");
    auto conv_tensor = [&](std::vector<int> shape, double fan_in) {
        return Tensor::randn(std::move(shape), init, std::sqrt(2.0 / fan_in));
    };

    net.stem.w = conv_tensor({spec.stem_channels, spec.in_channels, spec.stem_kernel,
                              spec.stem_kernel},
                             static_cast<double>(spec.in_channels) * spec.stem_kernel *
                                 spec.stem_kernel);
    net.stem_bn = TrainableBn(spec.stem_channels);

    int c = spec.stem_channels;
    for (int l = 0; l < spec.num_layers(); ++l) {
        const auto& layer = spec.layers[l];
        Block blk;
        blk.c_in = c;
        blk.c_mid = mid_channels(layer, c);
        blk.expand.w = conv_tensor({blk.c_mid, c, 1, 1}, c);
        blk.expand_bn = TrainableBn(blk.c_mid);
        for (const auto& p : layer.paths) {
            if (p.kind == PathKind::Depthwise)
                blk.paths.push_back({conv_tensor({blk.c_mid, 1, p.kernel, p.kernel},
                                                 static_cast<double>(p.kernel) * p.kernel),
                                     {}});
            else
                blk.paths.push_back(
                    {conv_tensor({blk.c_mid, blk.c_mid, p.kernel, p.kernel},
                                 static_cast<double>(blk.c_mid) * p.kernel * p.kernel),
                     {}});
            blk.path_bn.emplace_back(blk.c_mid);
        }
        int c_out = blk.c_mid;
        if (spec.aggregation == Aggregation::SumProj) {
            blk.proj.w = conv_tensor({c, blk.c_mid, 1, 1}, blk.c_mid);
            c_out = c;
        }
        for (std::uint32_t key : sbn_bank_keys(spec.sbn_mode, layer.n(), spec.m))
            blk.sbn.emplace(key, TrainableBn(c_out));
        blk.use_residual = spec.residual && c_out == c;
        c = c_out;
        net.blocks.push_back(std::move(blk));
    }

    net.head_w.w = Tensor::randn({c, spec.num_classes}, init, std::sqrt(1.0 / c));
    net.head_b.w = Tensor::zeros({spec.num_classes});
    return net;
}

double train_step(Supernet& net, const ArchMask& mask, const Batch& batch,
                  const TrainHyper& hyper, double lr) {
    if (!mask_valid(net.spec, mask))
        throw std::invalid_argument("train_step: mask does not fit the space");
    if (batch.images.dim(0) < 2)
        throw std::invalid_argument("train_step: batch needs at least two samples");
    zero_all_grads(net);
    ForwardActs acts;
    Tensor logits = train_forward(net, mask, batch.images, acts);
    const auto ce = softmax_cross_entropy_forward(logits, batch.labels);
    if (!std::isfinite(ce.loss)) throw NumericError("non-finite loss");
    train_backward(net, mask, acts, ce, batch.labels);
    update_touched(net, mask, lr, hyper);
    return ce.loss;
}

TrainResult train_supernet(Supernet& net, const Dataset& train_set,
                           const TrainHyper& hyper, const Rng& rng,
                           const ProbeConfig* probe) {
    if (train_set.size() == 0) throw std::invalid_argument("empty training set");
    if (hyper.batch_size < 2)
        throw std::invalid_argument("batch size must be >= 2 for train-mode BN");
    TrainResult result;

    const std::size_t batches_per_epoch = train_set.size() / hyper.batch_size;
    if (hyper.epochs > 0 && batches_per_epoch == 0)
        throw std::invalid_argument("training set smaller than one batch");
    const int total_steps = hyper.epochs * static_cast<int>(batches_per_epoch);

    auto run_probe = [&](int epoch) {
        if (!probe || probe->every <= 0) return;
        if (!probe->eval_set) throw std::invalid_argument("probe needs an eval set");
        Rng probe_rng = rng.split("probe", static_cast<std::uint64_t>(epoch));
        ProbePoint point;
        point.epoch = epoch;
        for (int i = 0; i < probe->models; ++i) {
            const auto mask = sample_mask(net.spec, hyper.bernoulli_p, probe_rng);
            point.accs.push_back(evaluate_oneshot(net, mask, *probe->eval_set, false));
        }
        double mean = 0.0;
        for (double a : point.accs) mean += a;
        mean /= point.accs.size();
        double var = 0.0;
        for (double a : point.accs) var += (a - mean) * (a - mean);
        var /= point.accs.size();
        point.mean_acc = mean;
        point.var_acc = var;
        result.probes.push_back(std::move(point));
    };

    run_probe(0);
    int step = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Rng shuffle_rng = rng.split("shuffle", static_cast<std::uint64_t>(epoch));
        Rng mask_rng = rng.split("mask", static_cast<std::uint64_t>(epoch));
        const auto batches = shuffled_batches(train_set.size(), hyper.batch_size, shuffle_rng);

        EpochLog log;
        log.epoch = epoch;
        log.lr = cosine_lr(hyper.lr, step, total_steps);
        double loss_sum = 0.0;

        for (const auto& batch_idx : batches) {
            const double lr = cosine_lr(hyper.lr, step, total_steps);
            const auto mask = sample_mask(net.spec, hyper.bernoulli_p, mask_rng);
            log.mask_counts[mask_to_string(mask)] += 1;

            Batch batch = make_batch(train_set, batch_idx);
            double loss;
            try {
                loss = train_step(net, mask, batch, hyper, lr);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " at epoch " +
                                   std::to_string(epoch) + " step " + std::to_string(step) +
                                   " mask " + mask_to_string(mask));
            }
            loss_sum += loss;
            ++step;
        }

        log.mean_loss = loss_sum / static_cast<double>(batches.size());
        result.epochs.push_back(std::move(log));
        if (probe && probe->every > 0 && (epoch + 1) % probe->every == 0)
            run_probe(epoch + 1);
    }
    return result;
}

Tensor forward_submodel(const Supernet& net, const ArchMask& mask, const Tensor& images,
                        const EvalOptions* opts) {
    FrozenCtx ctx;
    if (opts) {
        ctx.overrides = opts->overrides;
        ctx.capture_block = opts->capture_block;
        ctx.captured_pre = opts->captured_pre;
        ctx.captured_post = opts->captured_post;
    }
    return frozen_forward(net, mask, images, ctx);
}

BnSet calibrate_bn(const Supernet& net, const ArchMask& mask, const Dataset& calib,
                   int batches, int batch_size) {
    if (batches < 1) throw std::invalid_argument("calibrate_bn: need at least one batch");
    if (calib.size() < 2) throw std::invalid_argument("calibrate_bn: empty stream");
    if (!mask_valid(net.spec, mask))
        throw std::invalid_argument("calibrate_bn: mask does not fit the space");

    // fixed deterministic stream: sequential batches, cycled, batches of
    // fewer than two samples skipped (batch statistics need N >= 2)
    auto plan = sequential_batches(calib.size(), batch_size);
    std::erase_if(plan, [](const auto& idx) { return idx.size() < 2; });
    if (plan.empty()) throw std::invalid_argument("calibrate_bn: stream has no usable batch");

    std::map<std::string, CalibAccum> accum;
    FrozenCtx ctx;
    ctx.accum = &accum;
    for (int b = 0; b < batches; ++b) {
        const auto& idx = plan[static_cast<std::size_t>(b) % plan.size()];
        Batch batch = make_batch(calib, idx);
        frozen_forward(net, mask, batch.images, ctx);
    }

    // collect the original states of every touched BN, then replace their
    // running statistics with the plain average of the batch statistics
    BnSet out;
    auto take = [&](const std::string& name, const BnState& own) {
        auto it = accum.find(name);
        if (it == accum.end()) return; // not touched by this mask
        BnState s = own;
        const auto& acc = it->second;
        for (int ch = 0; ch < s.channels(); ++ch) {
            s.running_mean[ch] = acc.mean_sum[ch] / acc.count;
            s.running_var[ch] = acc.var_sum[ch] / acc.count;
        }
        out.emplace(name, std::move(s));
    };
    take(stem_bn_name(), net.stem_bn.bn);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const int bi = static_cast<int>(b);
        take(expand_bn_name(bi), net.blocks[b].expand_bn.bn);
        for (std::size_t i = 0; i < net.blocks[b].path_bn.size(); ++i)
            take(path_bn_name(bi, static_cast<int>(i)), net.blocks[b].path_bn[i].bn);
        for (const auto& [key, state] : net.blocks[b].sbn)
            take(sbn_name(bi, key), state.bn);
    }
    return out;
}

double evaluate_oneshot(const Supernet& net, const ArchMask& mask,
                        const Dataset& eval_set, bool calibrate, const Dataset* calib,
                        int calib_batches, int batch_size) {
    if (eval_set.size() == 0) throw std::invalid_argument("evaluate_oneshot: empty eval set");
    BnSet calibrated;
    EvalOptions opts;
    if (calibrate) {
        calibrated = calibrate_bn(net, mask, calib ? *calib : eval_set, calib_batches,
                                  batch_size);
        opts.overrides = &calibrated;
    }
    std::size_t correct = 0;
    for (const auto& idx : sequential_batches(eval_set.size(), batch_size)) {
        Batch batch = make_batch(eval_set, idx);
        Tensor logits = forward_submodel(net, mask, batch.images, &opts);
        const int K = logits.shape[1];
        for (int n = 0; n < logits.shape[0]; ++n) {
            int best = 0;
            for (int k = 1; k < K; ++k)
                if (logits.data[n * K + k] > logits.data[n * K + best]) best = k;
            if (best == batch.labels[n]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

void tie_layer_paths(Supernet& net) {
    for (auto& blk : net.blocks) {
        for (std::size_t i = 1; i < blk.paths.size(); ++i) {
            if (blk.paths[i].w.shape != blk.paths[0].w.shape)
                throw std::invalid_argument(
                    "tie_layer_paths: paths differ in kernel or kind");
            blk.paths[i].w.data = blk.paths[0].w.data;
            blk.path_bn[i].bn = blk.path_bn[0].bn;
        }
    }
}

} // namespace mixpath
