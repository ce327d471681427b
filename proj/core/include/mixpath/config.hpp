#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixpath/nsga2.hpp"
#include "mixpath/search_space.hpp"
#include "mixpath/supernet.hpp"

namespace mixpath {

// configuration problems: unknown keys, wrong types, out-of-range values,
// unparseable files (exit code 2 at the command line)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a referenced file or artifact is absent or does not belong to this
// configuration (exit code 3)
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The complete declarative experiment description. Serialized as one flat
// JSON object with dotted keys (see docs/config.md); every field has a
// default, unknown keys are rejected, and the canonical serialization is
// what gets hashed into run directory names.
struct RunConfig {
    // space.*
    int space_layers = 4;
    std::vector<int> space_kernels = {3, 5, 7};
    int space_m = 2;
    double space_expansion = 1.5;
    int space_image_hw = 10;
    int space_stem_channels = 8;
    int space_stem_kernel = 3;
    int space_stem_stride = 1;
    int space_classes = 4;
    std::string space_sbn_mode = "linear";
    std::string space_aggregation = "sum_proj";
    bool space_residual = true;

    // data.* (synthetic set sizes and their generation seed)
    int data_train_count = 512;
    int data_eval_count = 384;
    int data_calib_count = 384;
    std::uint64_t data_seed = 1;

    // train.*
    int train_epochs = 10;
    int train_batch_size = 32;
    double train_lr = 0.05;
    double train_momentum = 0.9;
    double train_weight_decay = 1e-4;
    double train_bernoulli_p = 0.5;
    int train_probe_every = 0; // 0 disables the stability probe
    int train_probe_models = 8;

    // calib.*
    int calib_batches = 8;
    int calib_batch_size = 64;

    // oracle.*
    int oracle_sample_count = 70;
    int oracle_seeds = 3;

    // rank.*
    int rank_sample_count = 70;
    bool rank_calibrate = true;
    bool rank_ablation = false; // emit the vanilla/sbn x raw/calibrated grid
    int rank_seeds = 3;

    // search.*
    int search_generations = 24;
    int search_population = 20;
    double search_acc_min = -1.0;
    std::uint64_t search_flops_max = 0; // 0 means unconstrained
    double search_w_acc = 1.0;
    double search_w_flops = 1.0;
    int search_tournament = 2;
    double search_crossover_rate = 1.0;
    double search_mutation_rate = 0.05;
    int search_picks = 5;
    std::uint64_t search_eval_cap = 500;
    bool search_random_baseline = true;

    std::uint64_t seed = 0; // master seed for every stochastic step

    bool operator==(const RunConfig&) const = default;
};

// Builds a config from a parsed JSON object: defaults for absent keys,
// ConfigError naming the offending key for unknown keys, type mismatches,
// and out-of-range values.
RunConfig config_from_json(const nlohmann::json& doc);

// Canonical flat representation containing every key; keys sort
// alphabetically and doubles round-trip exactly.
nlohmann::json config_to_json(const RunConfig& cfg);

// File front ends: MissingInput when the file is absent, ConfigError (with
// the parser's position diagnostic) when it does not parse or validate.
// read_config_file returns the raw document so command-line overrides can be
// applied before validation.
nlohmann::json read_config_file(const std::string& path);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);

// Applies one "key=value" assignment to a JSON document before validation.
// The value is parsed as JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Hash of the canonical serialization: names the run directory and stamps
// every artifact.
std::string config_hash(const RunConfig& cfg);

// Hash of only the space.* and data.* keys: a supernet checkpoint carries it
// so later commands can refuse checkpoints from a different space or data.
std::string config_fingerprint(const RunConfig& cfg);

// Materialized views of the config.
SearchSpaceSpec spec_of(const RunConfig& cfg);
TrainHyper hyper_of(const RunConfig& cfg);
SearchConfig search_of(const RunConfig& cfg);

// The three synthetic sets every command regenerates identically from the
// data.* keys: disjoint seed streams split off data.seed.
struct RunData {
    Dataset train;
    Dataset eval;
    Dataset calib;
};
RunData datasets_of(const RunConfig& cfg);

// Output root: the --out flag when nonempty, else $MIXPATH_RUNS_DIR, else
// "runs". run_dir appends the config hash.
std::string run_root(const std::string& out_flag);
std::string run_dir(const RunConfig& cfg, const std::string& out_flag);

} // namespace mixpath
