#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixpath/cost.hpp"
#include "mixpath/data.hpp"
#include "mixpath/search_space.hpp"
#include "mixpath/supernet.hpp"

namespace mixpath {

struct BenchRecord {
    ArchMask mask;
    double accuracy = 0.0; // mean over the seed runs that finished
    std::vector<double> seed_accuracies;
    std::uint64_t flops = 0;
    std::uint64_t params = 0;
    bool failed = false; // at least one seed run died
};

struct BenchTable {
    std::string fingerprint;
    double completeness = 1.0; // finished seed runs / requested seed runs
    std::vector<BenchRecord> rows;
};

// Canonical one-line text renderings; their hash is the fingerprint checked
// before mixing a table with artifacts built from other settings.
std::string describe_space(const SearchSpaceSpec& spec);
std::string describe_hyper(const TrainHyper& hyper);
std::string bench_fingerprint(const SearchSpaceSpec& spec, const TrainHyper& hyper);

// The fixed-topology model induced by mask: each layer keeps only its active
// paths, and the shadow bank collapses to a single vanilla BN.
SearchSpaceSpec restrict_to_mask(const SearchSpaceSpec& spec, const ArchMask& mask);

// Trains the standalone model from scratch, seeded by (seed, mask), and
// returns its held-out top-1 accuracy. Same schedule as supernet training
// but with the topology pinned.
double train_standalone(const SearchSpaceSpec& spec, const ArchMask& mask,
                        const Dataset& train, const Dataset& eval,
                        const TrainHyper& hyper, std::uint64_t seed);

// Ground-truth table: every mask trained once per seed across `workers`
// threads, merged in mask order, so the result does not depend on the worker
// count. A seed run that dies with a numeric blowup flags its row and lowers
// completeness; the table is still produced.
BenchTable build_bench(const SearchSpaceSpec& spec, const std::vector<ArchMask>& masks,
                       const std::vector<std::uint64_t>& seeds, const Dataset& train,
                       const Dataset& eval, const TrainHyper& hyper, int workers);

// JSON-lines persistence: a header line with fingerprint, completeness, and
// row count, then one record per line.
void save_bench(const BenchTable& table, const std::string& path);
BenchTable load_bench(const std::string& path);

// Recomputable invariants: valid unique masks, accuracy equal to the mean of
// its seed accuracies, flops and params equal to the cost model's output.
// Throws std::runtime_error on the first violation.
void verify_bench(const BenchTable& table, const SearchSpaceSpec& spec);

} // namespace mixpath
