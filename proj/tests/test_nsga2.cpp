#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mixpath/cost.hpp"
#include "mixpath/hash.hpp"
#include "mixpath/nsga2.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mixpath;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

struct FileGuard {
    std::string path;
    explicit FileGuard(std::string p) : path(std::move(p)) {}
    ~FileGuard() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Individual ind(double acc, std::uint64_t flops) {
    Individual x;
    x.accuracy = acc;
    x.flops = flops;
    return x;
}

// independent dominance test used by the reference sort below
bool beats(const Individual& a, const Individual& b) {
    if (a.accuracy < b.accuracy || a.flops > b.flops) return false;
    return a.accuracy > b.accuracy || a.flops < b.flops;
}

// reference front computation by repeated peeling of undominated members
std::vector<std::vector<int>> peel_fronts(const std::vector<Individual>& pop) {
    std::vector<std::vector<int>> fronts;
    std::vector<bool> assigned(pop.size(), false);
    std::size_t left = pop.size();
    while (left > 0) {
        std::vector<int> front;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (assigned[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < pop.size(); ++j)
                if (!assigned[j] && j != i && beats(pop[j], pop[i])) {
                    dominated = true;
                    break;
                }
            if (!dominated) front.push_back(static_cast<int>(i));
        }
        for (int i : front) assigned[static_cast<std::size_t>(i)] = true;
        left -= front.size();
        fronts.push_back(std::move(front));
    }
    return fronts;
}

SearchSpaceSpec tiny_spec() {
    SearchSpaceSpec spec = make_space(2, {3, 5}, 2, 1.5);
    spec.image_hw = 10;
    spec.stem_channels = 6;
    spec.num_classes = 3;
    return spec;
}

// the reference micro space: four layers, three kernels, up to two active
SearchSpaceSpec micro_spec() {
    SearchSpaceSpec spec = make_space(4, {3, 5, 7}, 2, 1.5);
    spec.image_hw = 10;
    spec.stem_channels = 6;
    spec.num_classes = 3;
    return spec;
}

// pure deterministic stand-in accuracy derived from the mask itself
Evaluator hash_evaluator() {
    return [](const ArchMask& mask) {
        return static_cast<double>(fnv1a64(mask_to_string(mask)) % 10000) / 10000.0;
    };
}

// fabricated finished oracle over the whole tiny space
BenchTable tiny_table() {
    const SearchSpaceSpec spec = tiny_spec();
    const std::vector<double> accs = {0.50, 0.60, 0.55, 0.40, 0.70, 0.65, 0.45, 0.72, 0.68};
    BenchTable table;
    table.fingerprint = "test";
    table.completeness = 1.0;
    const auto masks = enumerate_space(spec);
    REQUIRE(masks.size() == accs.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        BenchRecord row;
        row.mask = masks[i];
        row.accuracy = accs[i];
        row.seed_accuracies = {accs[i]};
        row.flops = arch_cost(spec, masks[i]).flops;
        row.params = arch_cost(spec, masks[i]).params;
        table.rows.push_back(std::move(row));
    }
    return table;
}

// exhaustive Pareto set of a table, as mask strings
std::set<std::string> pareto_of(const BenchTable& table) {
    std::set<std::string> front;
    for (const BenchRecord& a : table.rows) {
        bool dominated = false;
        for (const BenchRecord& b : table.rows) {
            const bool no_worse = b.accuracy >= a.accuracy && b.flops <= a.flops;
            const bool better = b.accuracy > a.accuracy || b.flops < a.flops;
            if (no_worse && better) {
                dominated = true;
                break;
            }
        }
        if (!dominated) front.insert(mask_to_string(a.mask));
    }
    return front;
}

std::set<std::string> front_masks(const std::vector<Individual>& pop) {
    std::set<std::string> out;
    for (const Individual& ind : pop)
        if (ind.rank == 0) out.insert(mask_to_string(ind.mask));
    return out;
}

} // namespace

TEST_CASE("dominates: hand cases and unevaluated rejection") {
    CHECK(dominates(ind(0.9, 100), ind(0.8, 150)));
    CHECK_FALSE(dominates(ind(0.8, 150), ind(0.9, 100)));
    CHECK_FALSE(dominates(ind(0.9, 100), ind(0.9, 100)));
    // trade-off: neither wins
    CHECK_FALSE(dominates(ind(0.9, 150), ind(0.8, 100)));
    CHECK_FALSE(dominates(ind(0.8, 100), ind(0.9, 150)));
    // equal accuracy, cheaper wins; equal flops, more accurate wins
    CHECK(dominates(ind(0.9, 100), ind(0.9, 120)));
    CHECK(dominates(ind(0.95, 100), ind(0.9, 100)));

    Individual fresh;
    CHECK_THROWS_AS((void)dominates(fresh, ind(0.5, 1)), std::invalid_argument);
    CHECK_THROWS_AS((void)dominates(ind(0.5, 1), fresh), std::invalid_argument);
}

TEST_CASE("non dominated sort matches the peeling oracle on random populations") {
    Rng rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.uniform_int(64);
        std::vector<Individual> pop(n);
        const bool coarse = trial % 2 == 0; // tie-heavy half
        for (std::size_t i = 0; i < n; ++i) {
            pop[i].accuracy = coarse ? static_cast<double>(rng.uniform_int(5)) / 4.0
                                     : rng.uniform();
            pop[i].flops = coarse ? rng.uniform_int(5) : rng.uniform_int(1000);
        }
        const auto want = peel_fronts(pop);
        std::vector<Individual> sorted = pop;
        const auto got = non_dominated_sort(sorted);

        REQUIRE(got.size() == want.size());
        for (std::size_t f = 0; f < got.size(); ++f) {
            std::vector<int> g = got[f], w = want[f];
            std::sort(g.begin(), g.end());
            std::sort(w.begin(), w.end());
            CHECK(g == w);
            for (int idx : g) CHECK(sorted[static_cast<std::size_t>(idx)].rank ==
                                    static_cast<int>(f));
        }
    }
}

TEST_CASE("non dominated sort hand cases") {
    // mixed: two incomparable leaders, one dominated straggler
    std::vector<Individual> pop = {ind(0.9, 100), ind(0.8, 50), ind(0.7, 150)};
    auto fronts = non_dominated_sort(pop);
    REQUIRE(fronts.size() == 2);
    CHECK(fronts[0] == std::vector<int>{0, 1});
    CHECK(fronts[1] == std::vector<int>{2});
    CHECK(pop[2].rank == 1);

    // all identical objectives collapse into a single front
    std::vector<Individual> same(5, ind(0.5, 10));
    fronts = non_dominated_sort(same);
    REQUIRE(fronts.size() == 1);
    CHECK(fronts[0].size() == 5);

    // a strict chain yields one singleton front per member
    std::vector<Individual> chain = {ind(0.5, 40), ind(0.7, 20), ind(0.9, 10)};
    fronts = non_dominated_sort(chain);
    REQUIRE(fronts.size() == 3);
    for (std::size_t f = 0; f < 3; ++f) CHECK(fronts[f].size() == 1);
    CHECK(chain[2].rank == 0);
    CHECK(chain[0].rank == 2);

    std::vector<Individual> empty;
    CHECK_THROWS_AS((void)non_dominated_sort(empty), std::invalid_argument);
}

TEST_CASE("crowding distance: boundaries, hand value, weights") {
    const double inf = std::numeric_limits<double>::infinity();

    // three equispaced points, unit weights: the middle one scores 1 + 1
    std::vector<Individual> pop = {ind(0.0, 100), ind(0.5, 75), ind(1.0, 50)};
    std::vector<int> front = {0, 1, 2};
    crowding_distance(pop, front, 1.0, 1.0);
    CHECK(pop[0].crowding == inf);
    CHECK(pop[2].crowding == inf);
    CHECK(pop[1].crowding == 2.0);

    // doubling both weights doubles every finite value exactly
    std::vector<Individual> doubled = {ind(0.0, 100), ind(0.5, 75), ind(1.0, 50)};
    crowding_distance(doubled, front, 2.0, 2.0);
    CHECK(doubled[1].crowding == 2.0 * pop[1].crowding);

    // fronts of one or two members are all boundary
    std::vector<Individual> pair = {ind(0.1, 5), ind(0.2, 4)};
    crowding_distance(pair, {0, 1}, 1.0, 1.0);
    CHECK(pair[0].crowding == inf);
    CHECK(pair[1].crowding == inf);

    // a flat objective contributes nothing (here: accuracy all equal)
    std::vector<Individual> flat = {ind(0.5, 100), ind(0.5, 80), ind(0.5, 60)};
    crowding_distance(flat, {0, 1, 2}, 1.0, 1.0);
    CHECK(flat[1].crowding == 1.0); // flops alone: (100 - 60) / (100 - 60)
    CHECK(flat[0].crowding == inf);
    CHECK(flat[2].crowding == inf);

    std::vector<Individual> one = {ind(0.5, 5)};
    CHECK_THROWS_AS(crowding_distance(one, {}, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(crowding_distance(one, {0}, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(crowding_distance(one, {3}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("tournament prefers rank then crowding") {
    std::vector<Individual> pop = {ind(0.9, 10), ind(0.5, 20)};
    pop[0].rank = 0;
    pop[0].crowding = 1.0;
    pop[1].rank = 1;
    pop[1].crowding = 99.0;

    Rng rng(77);
    int second = 0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t)
        if (tournament_select(pop, 2, rng) == 1) ++second;
    // the worse-ranked one wins only when drawn for both slots: about 1/4
    CHECK(second > trials / 8);
    CHECK(second < trials * 3 / 8);

    pop[1].rank = 0; // equal rank: higher crowding must win now
    Rng rng2(78);
    int low_crowding = 0;
    for (int t = 0; t < trials; ++t)
        if (tournament_select(pop, 2, rng2) == 0) ++low_crowding;
    CHECK(low_crowding > trials / 8);
    CHECK(low_crowding < trials * 3 / 8);

    CHECK_THROWS_AS((void)tournament_select({}, 2, rng), std::invalid_argument);
    CHECK_THROWS_AS((void)tournament_select(pop, 0, rng), std::invalid_argument);
}

TEST_CASE("crossover takes whole layers from either parent") {
    ArchMask a{{1u, 1u, 1u, 1u}};
    ArchMask b{{2u, 2u, 2u, 2u}};

    Rng rng(5);
    const ArchMask twin = crossover_masks(a, a, rng);
    CHECK(twin == a);

    std::vector<int> from_a(4, 0);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const ArchMask child = crossover_masks(a, b, rng);
        for (std::size_t l = 0; l < 4; ++l) {
            REQUIRE((child.layers[l] == 1u || child.layers[l] == 2u));
            if (child.layers[l] == 1u) ++from_a[static_cast<int>(l)];
        }
    }
    for (int l = 0; l < 4; ++l) {
        const double freq = static_cast<double>(from_a[l]) / trials;
        CHECK(freq > 0.48);
        CHECK(freq < 0.52);
    }

    ArchMask shorter{{1u, 1u}};
    CHECK_THROWS_AS((void)crossover_masks(a, shorter, rng), std::invalid_argument);
}

TEST_CASE("mutation resamples layers at the configured rate") {
    const SearchSpaceSpec spec = micro_spec();
    const ArchMask base{{1u, 1u, 1u, 1u}};

    // rate zero leaves both the mask and the rng untouched
    Rng used(9), untouched(9);
    ArchMask still = base;
    mutate_mask(still, spec, 0.0, used);
    CHECK(still == base);
    CHECK(used.next_u64() == untouched.next_u64());

    // rate one rewrites every layer with a valid submask
    Rng rng(10);
    for (int t = 0; t < 200; ++t) {
        ArchMask child = base;
        mutate_mask(child, spec, 1.0, rng);
        CHECK(mask_valid(spec, child));
    }

    // observable change rate: resampling can reproduce the old layer (one
    // case in six here), so expect about 0.05 * 5/6
    int changed = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        ArchMask child = base;
        mutate_mask(child, spec, 0.05, rng);
        for (std::size_t l = 0; l < 4; ++l)
            if (child.layers[l] != base.layers[l]) ++changed;
    }
    const double freq = static_cast<double>(changed) / (4.0 * trials);
    CHECK(freq > 0.02);
    CHECK(freq < 0.07);

    ArchMask child = base;
    CHECK_THROWS_AS(mutate_mask(child, spec, 1.5, rng), std::invalid_argument);
    ArchMask wrong{{1u}};
    CHECK_THROWS_AS(mutate_mask(wrong, spec, 0.5, rng), std::invalid_argument);
}

TEST_CASE("nsga2 recovers the exact pareto set of the tiny table") {
    const SearchSpaceSpec spec = tiny_spec();
    const BenchTable table = tiny_table();
    const std::set<std::string> want = pareto_of(table);
    REQUIRE(want.size() >= 2);
    REQUIRE(want.size() <= 8); // must fit into the population

    SearchConfig cfg;
    cfg.generations = 8;
    cfg.population = 8;
    cfg.mutation_rate = 0.25; // tiny space: explore hard so every mask is seen
    cfg.pareto_picks = 4;

    const SearchResult result = run_nsga2(spec, cfg, table_evaluator(table), Rng(100));

    CHECK(front_masks(result.population) == want);
    CHECK(result.evaluations == result.audit.size());
    CHECK(result.evaluations <= 9); // memoized: never more than the space

    // audit rows are unique masks with their exact table numbers
    std::set<std::string> seen;
    for (const AuditRow& row : result.audit) {
        CHECK(seen.insert(mask_to_string(row.mask)).second);
        CHECK(row.flops == arch_cost(spec, row.mask).flops);
    }

    // picks: rank-0 members, cheapest first, endpoints included
    REQUIRE(!result.picks.empty());
    CHECK(result.picks.size() == std::min<std::size_t>(4, want.size()));
    for (const Individual& p : result.picks) {
        CHECK(p.rank == 0);
        CHECK(want.count(mask_to_string(p.mask)) == 1);
    }
    for (std::size_t i = 1; i < result.picks.size(); ++i)
        CHECK(result.picks[i - 1].flops <= result.picks[i].flops);

    // elitism: parent-population bests never regress across generations
    REQUIRE(result.generations.size() == 9);
    for (std::size_t g = 1; g < result.generations.size(); ++g) {
        CHECK(result.generations[g].best_acc >= result.generations[g - 1].best_acc);
        CHECK(result.generations[g].best_flops <= result.generations[g - 1].best_flops);
        CHECK(result.generations[g].front0_size >= 1);
    }

    // deterministic and worker invariant
    const SearchResult again = run_nsga2(spec, cfg, table_evaluator(table), Rng(100));
    cfg.workers = 3;
    const SearchResult wide = run_nsga2(spec, cfg, table_evaluator(table), Rng(100));
    for (const SearchResult* other : {&again, &wide}) {
        REQUIRE(other->audit.size() == result.audit.size());
        for (std::size_t i = 0; i < result.audit.size(); ++i) {
            CHECK(other->audit[i].mask == result.audit[i].mask);
            CHECK(other->audit[i].accuracy == result.audit[i].accuracy);
            CHECK(other->audit[i].gen == result.audit[i].gen);
        }
        REQUIRE(other->population.size() == result.population.size());
        for (std::size_t i = 0; i < result.population.size(); ++i) {
            CHECK(other->population[i].mask == result.population[i].mask);
            CHECK(other->population[i].accuracy == result.population[i].accuracy);
            CHECK(other->population[i].rank == result.population[i].rank);
        }
    }
}

TEST_CASE("nsga2 respects constraints, budget, and config validation") {
    const SearchSpaceSpec spec = micro_spec();
    const Evaluator eval = hash_evaluator();

    // flops cap at the space median: nothing over it may ever be evaluated
    std::vector<std::uint64_t> all_flops;
    for (const ArchMask& m : enumerate_space(spec)) all_flops.push_back(arch_cost(spec, m).flops);
    std::sort(all_flops.begin(), all_flops.end());
    const std::uint64_t cap = all_flops[all_flops.size() / 2];

    SearchConfig cfg;
    cfg.generations = 5;
    cfg.population = 12;
    cfg.flops_max = cap;
    cfg.acc_min = 0.2;
    const SearchResult result = run_nsga2(spec, cfg, eval, Rng(7));

    for (const AuditRow& row : result.audit) CHECK(row.flops <= cap);
    for (const Individual& ind : result.population) {
        CHECK(ind.flops <= cap);
        CHECK(ind.accuracy > 0.2);
    }
    for (std::size_t g = 1; g < result.generations.size(); ++g) {
        CHECK(result.generations[g].best_acc >= result.generations[g - 1].best_acc);
        CHECK(result.generations[g].best_flops <= result.generations[g - 1].best_flops);
    }

    // zero generations: picks come straight from the filtered initial pool
    SearchConfig zero = cfg;
    zero.generations = 0;
    const SearchResult init_only = run_nsga2(spec, zero, eval, Rng(7));
    CHECK(init_only.generations.size() == 1);
    REQUIRE(!init_only.picks.empty());
    for (const Individual& p : init_only.picks) CHECK(p.rank == 0);

    // K = 1 returns exactly one rank-0 individual
    SearchConfig one = cfg;
    one.pareto_picks = 1;
    const SearchResult single = run_nsga2(spec, one, eval, Rng(7));
    REQUIRE(single.picks.size() == 1);
    CHECK(single.picks[0].rank == 0);

    // budget exhaustion and infeasible constraints time out
    SearchConfig starved = cfg;
    starved.eval_cap = 3;
    CHECK_THROWS_AS((void)run_nsga2(spec, starved, eval, Rng(7)), SearchTimeout);
    SearchConfig impossible = cfg;
    impossible.acc_min = 2.0;
    CHECK_THROWS_AS((void)run_nsga2(spec, impossible, eval, Rng(7)), SearchTimeout);
    SearchConfig strangled = cfg;
    strangled.flops_max = 1;
    CHECK_THROWS_AS((void)run_nsga2(spec, strangled, eval, Rng(7)), SearchTimeout);

    // config validation
    SearchConfig bad = cfg;
    bad.population = 7;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
    bad = cfg;
    bad.pareto_picks = 13;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
    bad = cfg;
    bad.w_acc = 0.0;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
    bad = cfg;
    bad.tournament = 0;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
    bad = cfg;
    bad.mutation_rate = -0.1;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
    bad = cfg;
    bad.workers = 0;
    CHECK_THROWS_AS((void)run_nsga2(spec, bad, eval, Rng(7)), std::invalid_argument);
}

TEST_CASE("random search: budget accounting and exact front on exhaustion") {
    const SearchSpaceSpec spec = tiny_spec();
    const BenchTable table = tiny_table();
    const Evaluator eval = table_evaluator(table);

    // budget one: a single evaluation, a front of one
    const RandomSearchResult tiny = run_random_search(
        spec, 1, std::numeric_limits<std::uint64_t>::max(), eval, Rng(1));
    CHECK(tiny.evaluations == 1);
    CHECK(tiny.front.size() == 1);
    CHECK(tiny.audit.size() == 1);

    // a budget beyond the space exhausts it: duplicates are memoized and the
    // front is exactly the table's true Pareto set
    const RandomSearchResult full = run_random_search(
        spec, 50, std::numeric_limits<std::uint64_t>::max(), eval, Rng(2));
    CHECK(full.evaluations == 9);
    std::set<std::string> got;
    for (const Individual& ind : full.front) got.insert(mask_to_string(ind.mask));
    CHECK(got == pareto_of(table));
    for (std::size_t i = 1; i < full.front.size(); ++i)
        CHECK(full.front[i - 1].flops <= full.front[i].flops);

    // deterministic and worker invariant
    const RandomSearchResult again = run_random_search(
        spec, 50, std::numeric_limits<std::uint64_t>::max(), eval, Rng(2), 3);
    REQUIRE(again.audit.size() == full.audit.size());
    for (std::size_t i = 0; i < full.audit.size(); ++i) {
        CHECK(again.audit[i].mask == full.audit[i].mask);
        CHECK(again.audit[i].accuracy == full.audit[i].accuracy);
    }

    CHECK_THROWS_AS((void)run_random_search(spec, 0, 100, eval, Rng(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)run_random_search(spec, 5, 1, eval, Rng(1)), SearchTimeout);
}

TEST_CASE("hypervolume: hand rectangle sums and dominance robustness") {
    // front {(0.5, 50), (0.75, 100)}, reference (0.25, 200):
    // 50 * 0.25 + 100 * 0.5 = 62.5 with binary-exact coordinates
    std::vector<Individual> front = {ind(0.5, 50), ind(0.75, 100)};
    CHECK(hypervolume2d(front, 0.25, 200) == 62.5);

    // adding a dominated point changes nothing
    front.push_back(ind(0.5, 120));
    CHECK(hypervolume2d(front, 0.25, 200) == 62.5);

    // points at or beyond the reference contribute nothing
    front.push_back(ind(0.2, 10));
    front.push_back(ind(0.9, 300));
    CHECK(hypervolume2d(front, 0.25, 200) == 62.5);

    CHECK(hypervolume2d({}, 0.25, 200) == 0.0);
    CHECK(hypervolume2d({ind(0.1, 500)}, 0.25, 200) == 0.0);

    // a front that strictly encloses another covers more area
    const std::vector<Individual> inner = {ind(0.4, 80)};
    const std::vector<Individual> outer = {ind(0.6, 60)};
    CHECK(hypervolume2d(outer, 0.25, 200) > hypervolume2d(inner, 0.25, 200));

    Individual fresh;
    CHECK_THROWS_AS((void)hypervolume2d({fresh}, 0.25, 200), std::invalid_argument);
}

TEST_CASE("search artifact writers round trip") {
    const SearchSpaceSpec spec = tiny_spec();
    const BenchTable table = tiny_table();
    SearchConfig cfg;
    cfg.generations = 3;
    cfg.population = 6;
    cfg.pareto_picks = 3;
    cfg.mutation_rate = 0.25;
    const SearchResult result = run_nsga2(spec, cfg, table_evaluator(table), Rng(100));

    const FileGuard audit_file(temp_path("mixpath_audit_test.jsonl"));
    const FileGuard picks_file(temp_path("mixpath_picks_test.json"));
    save_audit_jsonl(result, audit_file.path);
    save_picks_json(result.picks, picks_file.path);

    const std::string audit_text = slurp(audit_file.path);
    std::istringstream lines(audit_text);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        const nlohmann::json j = nlohmann::json::parse(line);
        CHECK(j.contains("gen"));
        CHECK(j.contains("mask"));
        CHECK(j.contains("acc"));
        CHECK(j.contains("flops"));
        CHECK(j.contains("rank"));
        CHECK(j.contains("crowding"));
        ++rows;
    }
    CHECK(rows == result.audit.size());

    const nlohmann::json picks = nlohmann::json::parse(slurp(picks_file.path));
    REQUIRE(picks.is_array());
    CHECK(picks.size() == result.picks.size());
    for (const auto& p : picks) CHECK(p.at("rank").get<int>() == 0);

    save_audit_jsonl(result, audit_file.path);
    CHECK(slurp(audit_file.path) == audit_text);
}
