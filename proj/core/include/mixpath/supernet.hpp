#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixpath/data.hpp"
#include "mixpath/ops.hpp"
#include "mixpath/search_space.hpp"

namespace mixpath {

// A weight tensor together with its SGD velocity buffer.
struct ParamTensor {
    Tensor w;
    std::vector<float> vel;
};

// A batch-norm state with gradient accumulators and velocities for the
// learnable affine pair.
struct TrainableBn {
    BnState bn;
    std::vector<float> dgamma, dbeta;
    std::vector<float> vgamma, vbeta;

    TrainableBn() = default;
    explicit TrainableBn(int c) : bn(c) {}
    void zero_grad() {
        dgamma.assign(bn.channels(), 0.0f);
        dbeta.assign(bn.channels(), 0.0f);
    }
};

// One choice layer: shared 1x1 expansion, n candidate paths (each with a
// private vanilla BN), sum of the active set, optional 1x1 projection, then
// the shadow bank. The residual skip, when shapes allow it, adds the block
// input to the post-bank output.
struct Block {
    int c_in = 0;
    int c_mid = 0;
    ParamTensor expand;
    TrainableBn expand_bn;
    std::vector<ParamTensor> paths;
    std::vector<TrainableBn> path_bn;
    ParamTensor proj; // unused when aggregation == Sum
    std::map<std::uint32_t, TrainableBn> sbn;
    bool use_residual = false;
};

struct Supernet {
    SearchSpaceSpec spec;
    int feat_hw = 0; // spatial size after the stem
    ParamTensor stem;
    TrainableBn stem_bn;
    std::vector<Block> blocks;
    ParamTensor head_w; // [features, classes]
    ParamTensor head_b; // [classes]
};

// Every candidate path gets exactly one parameter set; draws come from
// rng.split("init") in a fixed structural order, so two nets built from the
// same seed share identical weights even when their bank layouts differ.
Supernet build_supernet(const SearchSpaceSpec& spec, const Rng& rng);

// Canonical parameter names, shared by checkpoints, calibration overrides,
// and stat dumps. BN names expand to .gamma/.beta/.mean/.var entries in the
// checkpoint container.
std::string stem_conv_name();
std::string stem_bn_name();
std::string expand_name(int block);
std::string expand_bn_name(int block);
std::string path_name(int block, int path);
std::string path_bn_name(int block, int path);
std::string proj_name(int block);
std::string sbn_name(int block, std::uint32_t key);

struct TrainHyper {
    int epochs = 10;
    int batch_size = 32;
    double lr = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double bernoulli_p = 0.5;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    std::map<std::string, int> mask_counts; // sampled mask -> times drawn
};

struct ProbePoint {
    int epoch = 0;
    double mean_acc = 0.0;
    double var_acc = 0.0;
    std::vector<double> accs;
};

// When `every` > 0, training pauses at epochs 0, every, 2*every, ... and
// evaluates `models` freshly sampled masks on `eval_set` without
// calibration, recording mean and (population) variance of their one-shot
// accuracies.
struct ProbeConfig {
    int every = 0;
    int models = 20;
    const Dataset* eval_set = nullptr;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    std::vector<ProbePoint> probes;
};

// One optimizer step on the submodel induced by `mask`: train-mode forward,
// cross entropy, backprop, SGD update of exactly the parameters that
// submodel touched (shared stem/head/expand/projection, active paths, the
// selected bank state). Returns the batch loss.
double train_step(Supernet& net, const ArchMask& mask, const Batch& batch,
                  const TrainHyper& hyper, double lr);

// Algorithm: per batch, sample one mask, forward the induced submodel in
// train mode, backpropagate, and update only the parameters that submodel
// touched. Cosine-annealed learning rate over all steps. Throws
// NumericError with step context if the loss stops being finite.
TrainResult train_supernet(Supernet& net, const Dataset& train_set,
                           const TrainHyper& hyper, const Rng& rng,
                           const ProbeConfig* probe = nullptr);

// Worker-local recalibrated BN states keyed by canonical BN name.
using BnSet = std::map<std::string, BnState>;

struct EvalOptions {
    const BnSet* overrides = nullptr; // calibrated states to use instead
    int capture_block = -1;           // >= 0: capture features at this block
    Tensor* captured_pre = nullptr;   // pre-bank aggregate (set when capturing)
    Tensor* captured_post = nullptr;  // post-bank output before residual
};

// Deterministic eval-mode forward of the submodel induced by `mask`.
Tensor forward_submodel(const Supernet& net, const ArchMask& mask,
                        const Tensor& images, const EvalOptions* opts = nullptr);

// Streams `batches` batches of `calib` through the submodel, recomputing
// every touched BN state's running statistics as the plain average of the
// per-batch statistics (gamma/beta untouched, net unmodified). The stream
// restarts from the front of `calib` deterministically.
BnSet calibrate_bn(const Supernet& net, const ArchMask& mask, const Dataset& calib,
                   int batches, int batch_size);

// Top-1 accuracy of the submodel over eval_set; optionally calibrates BN on
// `calib` first. Deterministic for fixed inputs.
double evaluate_oneshot(const Supernet& net, const ArchMask& mask,
                        const Dataset& eval_set, bool calibrate,
                        const Dataset* calib = nullptr, int calib_batches = 8,
                        int batch_size = 64);

// Test-construction helper: copies path 0's weights and BN into every other
// path of each block, producing the identical-shared-weights supernet. All
// paths of a layer must share kernel size and kind.
void tie_layer_paths(Supernet& net);

} // namespace mixpath
