#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixpath/bench.hpp"
#include "mixpath/data.hpp"
#include "mixpath/search_space.hpp"
#include "mixpath/supernet.hpp"

namespace mixpath {

// thrown when a search cannot make progress: the unique-evaluation budget is
// exhausted or the constraints reject every candidate the sampler produces
struct SearchTimeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Individual {
    ArchMask mask;
    double accuracy = -1.0; // < 0 means not evaluated yet
    std::uint64_t flops = 0;
    int rank = -1;
    double crowding = 0.0;
};

// a is no worse in both objectives (accuracy up, flops down) and strictly
// better in at least one; throws on unevaluated input
bool dominates(const Individual& a, const Individual& b);

// Fast non-dominated sort. Returns fronts as index lists into `pop` (front 0
// first) and writes each individual's rank back. Fronts partition the
// population; members of one front are mutually non-dominating.
std::vector<std::vector<int>> non_dominated_sort(std::vector<Individual>& pop);

// Weighted crowding distance over one front (indices into `pop`), written
// back to the members. Boundary individuals per objective get +infinity;
// interior ones accumulate w * (next - prev) / range per objective, with a
// zero-range objective contributing nothing.
void crowding_distance(std::vector<Individual>& pop, const std::vector<int>& front,
                       double w_acc, double w_flops);

// Binary (or larger) tournament: draws `size` contenders uniformly and keeps
// the best by rank, breaking ties by larger crowding. Returns a pop index.
int tournament_select(const std::vector<Individual>& pop, int size, Rng& rng);

// Per-layer uniform crossover: each child layer is taken whole from one
// parent, so validity is preserved by construction.
ArchMask crossover_masks(const ArchMask& a, const ArchMask& b, Rng& rng);

// Resamples each layer's bitmask with probability `rate` using the space's
// per-layer sampling rule.
void mutate_mask(ArchMask& child, const SearchSpaceSpec& spec, double rate, Rng& rng);

struct SearchConfig {
    int generations = 8;
    int population = 20; // even, >= 4
    double acc_min = -1.0; // acceptance is strict, so the default admits everything
    std::uint64_t flops_max = std::numeric_limits<std::uint64_t>::max();
    double w_acc = 1.0;
    double w_flops = 1.0;
    int tournament = 2;
    double crossover_rate = 1.0; // 1.0 reproduces the bare algorithm
    double mutation_rate = 0.05; // 0 disables mutation entirely
    int pareto_picks = 5;        // K
    std::uint64_t eval_cap = 50000; // unique accuracy evaluations allowed
    int workers = 1;
};

// one row per unique accuracy evaluation; rank and crowding are stamped from
// the final population afterwards (-1 when the mask did not survive)
struct AuditRow {
    int gen = 0;
    ArchMask mask;
    double accuracy = 0.0;
    std::uint64_t flops = 0;
    int rank = -1;
    double crowding = 0.0;
};

// per-generation elite summary of the parent population
struct GenStat {
    int gen = 0;
    double best_acc = 0.0;
    std::uint64_t best_flops = 0;
    int front0_size = 0;
};

struct SearchResult {
    std::vector<Individual> population; // final population, ranks recomputed
    std::vector<Individual> picks;      // K rank-0 members equispaced by flops
    std::vector<AuditRow> audit;
    std::vector<GenStat> generations;
    std::uint64_t evaluations = 0; // unique accuracy evaluations spent
};

// accuracy of one mask; must be pure, thread safe, and finite in [0, 1]
using Evaluator = std::function<double(const ArchMask&)>;

// looks masks up in a finished oracle table; throws on unknown masks
Evaluator table_evaluator(const BenchTable& table);

// scores masks on the supernet, optionally with per-mask BN calibration;
// all referenced objects must outlive the returned function
Evaluator supernet_evaluator(const Supernet& net, const Dataset& eval_set, bool calibrate,
                             const Dataset* calib = nullptr, int calib_batches = 8,
                             int batch_size = 64);

// The full elitist loop: seeded uniform initial populations (candidates over
// the flops cap are rejected before evaluation, candidates at or below
// acc_min after it), non-dominated sorting with weighted crowding, tournament
// selection, per-layer crossover and optional mutation. Offspring of one
// generation are evaluated in parallel; results are identical for any worker
// count. Duplicate masks are never re-evaluated and the unique-evaluation
// budget is cfg.eval_cap; exceeding it, or failing to assemble a population
// because the constraints reject everything, raises SearchTimeout.
SearchResult run_nsga2(const SearchSpaceSpec& spec, const SearchConfig& cfg,
                       const Evaluator& evaluate, const Rng& rng);

// Equal-budget baseline: samples masks with the same per-layer rule, rejects
// over-cap ones before evaluation, memoizes duplicates, and stops after
// `budget` unique evaluations (or earlier when the space is exhausted).
// Returns the non-dominated subset sorted by flops, plus the audit rows.
struct RandomSearchResult {
    std::vector<Individual> front;
    std::vector<AuditRow> audit;
    std::uint64_t evaluations = 0;
};
RandomSearchResult run_random_search(const SearchSpaceSpec& spec, std::uint64_t budget,
                                     std::uint64_t flops_max, const Evaluator& evaluate,
                                     const Rng& rng, int workers = 1);

// Dominated-region area for maximize-accuracy / minimize-flops fronts,
// measured against a reference point that every counted rectangle must beat.
// Dominated or out-of-reference members contribute nothing.
double hypervolume2d(const std::vector<Individual>& points, double acc_ref,
                     std::uint64_t flops_ref);

void save_audit_jsonl(const SearchResult& result, const std::string& path);
void save_picks_json(const std::vector<Individual>& picks, const std::string& path);

} // namespace mixpath
