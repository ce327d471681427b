#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixpath/bench.hpp"
#include "mixpath/data.hpp"
#include "mixpath/search_space.hpp"
#include "mixpath/supernet.hpp"

namespace mixpath {

// Tie-corrected Kendall rank correlation (tau-b):
//   (concordant - discordant) / sqrt((P - T_a)(P - T_b)),  P = n(n-1)/2
// computed with a merge-sort exchange count. Throws on length mismatch,
// length < 2, and NumericError when either list is fully tied (denominator
// zero; the coefficient is undefined there).
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

struct RankingEntry {
    ArchMask mask;
    double oneshot = 0.0; // supernet prediction
    double truth = 0.0;   // ground truth from the bench table
};

struct RankingReport {
    std::vector<RankingEntry> entries;
    double tau = 0.0;
    std::string sbn_mode; // configuration tags echoed into the artifacts
    bool calibrated = false;
    std::uint64_t seed = 0;
};

struct RankingConfig {
    int sample_count = 70;
    bool calibrate = true;
    int calib_batches = 8;
    int batch_size = 64;
    int workers = 1;
    std::uint64_t seed = 0;
};

// Samples sample_count rows from the oracle table (without replacement,
// seeded), scores each mask with the one-shot evaluator in parallel, and
// pairs the predictions with the stored ground truth. Worker-local
// calibration; entries ordered by sample index, so the report is identical
// for any worker count.
RankingReport ranking_experiment(const Supernet& net, const BenchTable& oracle,
                                 const Dataset& eval_set, const Dataset& calib_set,
                                 const RankingConfig& cfg);

void save_ranking_csv(const RankingReport& report, const std::string& path);
void save_ranking_json(const RankingReport& report, const std::string& path);

// Trains a fresh supernet while periodically scoring probe_models random
// masks on the held-out set (the stability time series). Returns one point
// per probe epoch, starting with untrained epoch 0.
std::vector<ProbePoint> stability_probe(const SearchSpaceSpec& spec, const Dataset& train,
                                        const Dataset& eval, const TrainHyper& hyper,
                                        int probe_every, int probe_models, const Rng& rng);
void save_probe_csv(const std::vector<ProbePoint>& series, const std::string& path);

// Everything the shadow banks learned, plus the scaling evidence: raw
// per-key statistics and the SBN_1/SBN_k ratio arrays (k = 2..cap). For the
// subset-keyed bank, keys of equal cardinality are averaged first.
struct SbnKeyStats {
    std::uint32_t key = 0;
    std::vector<double> mean, var;
    std::vector<float> gamma, beta;
};

struct SbnRatio {
    int k = 2; // ratio SBN_1 / SBN_k
    // one entry per channel whose denominator magnitude exceeds eps
    std::vector<double> mean_ratio, var_ratio, gamma_ratio, beta_ratio;
    // medians over the defined entries; meaningful only when the matching
    // array is nonempty
    double median_mean_ratio = 0.0, median_var_ratio = 0.0;
};

struct SbnStatsDump {
    struct BlockDump {
        int block = 0;
        std::vector<SbnKeyStats> keys;
        std::vector<SbnRatio> ratios;
    };
    std::vector<BlockDump> blocks;
    double eps = 1e-8;
};

SbnStatsDump sbn_stats(const Supernet& net, double eps = 1e-8);
void save_sbn_stats_csv(const SbnStatsDump& dump, const std::string& path);
void save_sbn_ratios_csv(const SbnStatsDump& dump, const std::string& path);

// Pre-bank feature geometry at one block: pairwise cosine similarity of the
// flattened aggregate for every valid path selection of that layer (single
// paths and multi-path sums), with upstream layers pinned to their first
// path. Magnitudes are reported before and after the bank. Zero-magnitude
// selections are flagged; their similarities are recorded as 0.
struct SimilarityMatrix {
    int block = 0;
    std::vector<std::uint32_t> selections; // layer masks, ascending
    std::vector<std::vector<double>> cosine;
    std::vector<double> pre_magnitude, post_magnitude;
    std::vector<bool> degenerate;
};

SimilarityMatrix feature_similarity(const Supernet& net, int block,
                                    const Tensor& probe_batch);
void save_similarity_csv(const SimilarityMatrix& sim, const std::string& path);

} // namespace mixpath
