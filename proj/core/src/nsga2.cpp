#include "mixpath/nsga2.hpp"

#include "mixpath/cost.hpp"
#include "mixpath/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace mixpath {

namespace {

void check_evaluated(const Individual& x, const char* who) {
    if (!std::isfinite(x.accuracy) || x.accuracy < 0.0)
        throw std::invalid_argument(std::string(who) + ": unevaluated individual");
}

std::ofstream open_out(const std::string& path, const char* who) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
    return out;
}

// shared memoized evaluation front end: budget accounting, audit rows, and
// chunked parallel scoring of masks nobody has seen yet
struct EvalPool {
    const Evaluator& evaluate;
    int workers;
    std::uint64_t cap;
    std::unordered_map<std::string, double> memo;
    std::vector<AuditRow> audit;
    std::uint64_t spent = 0;

    // returns accuracies aligned with `candidates`; only fresh masks are
    // evaluated (in parallel), in first-appearance order
    std::vector<double> score(const std::vector<ArchMask>& candidates,
                              const std::vector<std::uint64_t>& flops, int gen) {
        std::vector<std::string> names(candidates.size());
        std::vector<std::size_t> fresh;
        std::unordered_set<std::string> in_flight;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            names[i] = mask_to_string(candidates[i]);
            if (memo.count(names[i]) == 0 && in_flight.insert(names[i]).second)
                fresh.push_back(i);
        }
        if (spent + fresh.size() > cap)
            throw SearchTimeout("unique evaluation budget of " + std::to_string(cap) +
                                " exhausted");
        const std::vector<double> scored = parallel_map<double>(
            fresh.size(), workers,
            [&](std::size_t i) { return evaluate(candidates[fresh[i]]); });
        for (std::size_t i = 0; i < fresh.size(); ++i) {
            const double acc = scored[i];
            if (!std::isfinite(acc) || acc < 0.0 || acc > 1.0)
                throw NumericError("evaluator returned " + std::to_string(acc) + " for mask " +
                                   names[fresh[i]]);
            memo.emplace(names[fresh[i]], acc);
            AuditRow row;
            row.gen = gen;
            row.mask = candidates[fresh[i]];
            row.accuracy = acc;
            row.flops = flops[fresh[i]];
            audit.push_back(std::move(row));
        }
        spent += fresh.size();
        std::vector<double> out(candidates.size());
        for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = memo.at(names[i]);
        return out;
    }
};

// rank-then-crowding population truncation shared by the generation loop and
// the final assembly; `pop` must already be sorted with crowding assigned
std::vector<Individual> select_best(const std::vector<Individual>& pop,
                                    const std::vector<std::vector<int>>& fronts, int n) {
    std::vector<Individual> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const std::vector<int>& front : fronts) {
        if (static_cast<int>(out.size() + front.size()) <= n) {
            for (int idx : front) out.push_back(pop[static_cast<std::size_t>(idx)]);
        } else {
            std::vector<int> rest = front;
            std::stable_sort(rest.begin(), rest.end(), [&](int x, int y) {
                return pop[static_cast<std::size_t>(x)].crowding >
                       pop[static_cast<std::size_t>(y)].crowding;
            });
            for (int idx : rest) {
                if (static_cast<int>(out.size()) == n) break;
                out.push_back(pop[static_cast<std::size_t>(idx)]);
            }
        }
        if (static_cast<int>(out.size()) == n) break;
    }
    return out;
}

void sort_and_crowd(std::vector<Individual>& pop, std::vector<std::vector<int>>& fronts,
                    const SearchConfig& cfg) {
    fronts = non_dominated_sort(pop);
    for (const std::vector<int>& front : fronts)
        crowding_distance(pop, front, cfg.w_acc, cfg.w_flops);
}

GenStat stat_of(const std::vector<Individual>& pop, int gen) {
    GenStat stat;
    stat.gen = gen;
    stat.best_acc = 0.0;
    stat.best_flops = std::numeric_limits<std::uint64_t>::max();
    for (const Individual& ind : pop) {
        stat.best_acc = std::max(stat.best_acc, ind.accuracy);
        stat.best_flops = std::min(stat.best_flops, ind.flops);
        if (ind.rank == 0) ++stat.front0_size;
    }
    return stat;
}

// deterministic ordering along the front: cheap to expensive
void sort_front_indices(std::vector<int>& idx, const std::vector<Individual>& pop) {
    std::sort(idx.begin(), idx.end(), [&](int x, int y) {
        const Individual& a = pop[static_cast<std::size_t>(x)];
        const Individual& b = pop[static_cast<std::size_t>(y)];
        if (a.flops != b.flops) return a.flops < b.flops;
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return mask_to_string(a.mask) < mask_to_string(b.mask);
    });
}

nlohmann::json row_json(const AuditRow& row) {
    nlohmann::json j;
    j["gen"] = row.gen;
    j["mask"] = mask_to_string(row.mask);
    j["acc"] = row.accuracy;
    j["flops"] = row.flops;
    j["rank"] = row.rank;
    j["crowding"] = row.crowding; // +inf serializes as null
    return j;
}

} // namespace

bool dominates(const Individual& a, const Individual& b) {
    check_evaluated(a, "dominates");
    check_evaluated(b, "dominates");
    const bool no_worse = a.accuracy >= b.accuracy && a.flops <= b.flops;
    const bool better = a.accuracy > b.accuracy || a.flops < b.flops;
    return no_worse && better;
}

std::vector<std::vector<int>> non_dominated_sort(std::vector<Individual>& pop) {
    if (pop.empty()) throw std::invalid_argument("non_dominated_sort: empty population");
    const int n = static_cast<int>(pop.size());
    for (const Individual& ind : pop) check_evaluated(ind, "non_dominated_sort");

    std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const std::size_t si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
            if (dominates(pop[si], pop[sj])) {
                dominated[si].push_back(j);
                ++count[sj];
            } else if (dominates(pop[sj], pop[si])) {
                dominated[sj].push_back(i);
                ++count[si];
            }
        }

    std::vector<std::vector<int>> fronts;
    std::vector<int> current;
    for (int i = 0; i < n; ++i)
        if (count[static_cast<std::size_t>(i)] == 0) current.push_back(i);
    while (!current.empty()) {
        const int rank = static_cast<int>(fronts.size());
        std::vector<int> next;
        for (int i : current) {
            pop[static_cast<std::size_t>(i)].rank = rank;
            for (int j : dominated[static_cast<std::size_t>(i)])
                if (--count[static_cast<std::size_t>(j)] == 0) next.push_back(j);
        }
        fronts.push_back(std::move(current));
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fronts;
}

void crowding_distance(std::vector<Individual>& pop, const std::vector<int>& front,
                       double w_acc, double w_flops) {
    if (front.empty()) throw std::invalid_argument("crowding_distance: empty front");
    if (w_acc <= 0.0 || w_flops <= 0.0)
        throw std::invalid_argument("crowding_distance: weights must be positive");
    for (int idx : front)
        if (idx < 0 || idx >= static_cast<int>(pop.size()))
            throw std::invalid_argument("crowding_distance: front index out of range");

    const double inf = std::numeric_limits<double>::infinity();
    if (front.size() <= 2) {
        for (int idx : front) pop[static_cast<std::size_t>(idx)].crowding = inf;
        return;
    }
    for (int idx : front) pop[static_cast<std::size_t>(idx)].crowding = 0.0;

    const auto accumulate = [&](auto value, double weight) {
        std::vector<int> order = front;
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            const double vx = value(pop[static_cast<std::size_t>(x)]);
            const double vy = value(pop[static_cast<std::size_t>(y)]);
            if (vx != vy) return vx < vy;
            return x < y;
        });
        const double lo = value(pop[static_cast<std::size_t>(order.front())]);
        const double hi = value(pop[static_cast<std::size_t>(order.back())]);
        // a flat objective separates nobody and contributes nothing
        if (hi == lo) return;
        pop[static_cast<std::size_t>(order.front())].crowding = inf;
        pop[static_cast<std::size_t>(order.back())].crowding = inf;
        for (std::size_t i = 1; i + 1 < order.size(); ++i) {
            const double prev = value(pop[static_cast<std::size_t>(order[i - 1])]);
            const double next = value(pop[static_cast<std::size_t>(order[i + 1])]);
            pop[static_cast<std::size_t>(order[i])].crowding += weight * (next - prev) / (hi - lo);
        }
    };
    accumulate([](const Individual& x) { return x.accuracy; }, w_acc);
    accumulate([](const Individual& x) { return static_cast<double>(x.flops); }, w_flops);
}

int tournament_select(const std::vector<Individual>& pop, int size, Rng& rng) {
    if (pop.empty()) throw std::invalid_argument("tournament_select: empty population");
    if (size < 1) throw std::invalid_argument("tournament_select: size must be >= 1");
    int best = static_cast<int>(rng.uniform_int(pop.size()));
    for (int t = 1; t < size; ++t) {
        const int c = static_cast<int>(rng.uniform_int(pop.size()));
        const Individual& a = pop[static_cast<std::size_t>(c)];
        const Individual& b = pop[static_cast<std::size_t>(best)];
        if (a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)) best = c;
    }
    return best;
}

ArchMask crossover_masks(const ArchMask& a, const ArchMask& b, Rng& rng) {
    if (a.layers.size() != b.layers.size())
        throw std::invalid_argument("crossover_masks: parents differ in layer count");
    ArchMask child;
    child.layers.reserve(a.layers.size());
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        child.layers.push_back(rng.bernoulli(0.5) ? a.layers[l] : b.layers[l]);
    return child;
}

void mutate_mask(ArchMask& child, const SearchSpaceSpec& spec, double rate, Rng& rng) {
    if (rate < 0.0 || rate > 1.0)
        throw std::invalid_argument("mutate_mask: rate must lie in [0, 1]");
    if (child.layers.size() != spec.layers.size())
        throw std::invalid_argument("mutate_mask: mask does not fit the space");
    if (rate == 0.0) return; // leaves the rng untouched
    for (std::size_t l = 0; l < child.layers.size(); ++l)
        if (rng.bernoulli(rate))
            child.layers[l] = sample_layer_mask(spec.layers[l].n(), spec.m, 0.5, rng);
}

Evaluator table_evaluator(const BenchTable& table) {
    auto lookup = std::make_shared<std::unordered_map<std::string, double>>();
    for (const BenchRecord& row : table.rows)
        lookup->emplace(mask_to_string(row.mask), row.accuracy);
    return [lookup](const ArchMask& mask) {
        const auto it = lookup->find(mask_to_string(mask));
        if (it == lookup->end())
            throw std::invalid_argument("table_evaluator: mask " + mask_to_string(mask) +
                                        " is not in the table");
        return it->second;
    };
}

Evaluator supernet_evaluator(const Supernet& net, const Dataset& eval_set, bool calibrate,
                             const Dataset* calib, int calib_batches, int batch_size) {
    return [&net, &eval_set, calibrate, calib, calib_batches, batch_size](const ArchMask& mask) {
        return evaluate_oneshot(net, mask, eval_set, calibrate, calib, calib_batches,
                                batch_size);
    };
}

SearchResult run_nsga2(const SearchSpaceSpec& spec, const SearchConfig& cfg,
                       const Evaluator& evaluate, const Rng& rng) {
    validate(spec);
    if (cfg.population < 4 || cfg.population % 2 != 0)
        throw std::invalid_argument("run_nsga2: population must be even and at least 4");
    if (cfg.generations < 0) throw std::invalid_argument("run_nsga2: negative generations");
    if (cfg.tournament < 1) throw std::invalid_argument("run_nsga2: tournament size must be >= 1");
    if (cfg.crossover_rate < 0.0 || cfg.crossover_rate > 1.0 || cfg.mutation_rate < 0.0 ||
        cfg.mutation_rate > 1.0)
        throw std::invalid_argument("run_nsga2: rates must lie in [0, 1]");
    if (cfg.pareto_picks < 1 || cfg.pareto_picks > cfg.population)
        throw std::invalid_argument("run_nsga2: pareto_picks must lie in [1, population]");
    if (cfg.w_acc <= 0.0 || cfg.w_flops <= 0.0)
        throw std::invalid_argument("run_nsga2: objective weights must be positive");
    if (cfg.eval_cap < 1) throw std::invalid_argument("run_nsga2: eval_cap must be >= 1");
    if (cfg.workers < 1) throw std::invalid_argument("run_nsga2: workers must be >= 1");

    Rng init_rng = rng.split("init");
    Rng tour_rng = rng.split("tournament");
    Rng cross_rng = rng.split("crossover");
    Rng mut_rng = rng.split("mutation");

    EvalPool pool{evaluate, cfg.workers, cfg.eval_cap, {}, {}, 0};
    const int n = cfg.population;

    // draws candidates until `want` of them pass both constraints; flops
    // rejection happens before any evaluation is spent
    const auto fill = [&](int want, int gen, const std::function<ArchMask()>& make_candidate) {
        std::vector<Individual> accepted;
        accepted.reserve(static_cast<std::size_t>(want));
        std::uint64_t attempts = 0;
        const std::uint64_t guard = 4096ull * static_cast<std::uint64_t>(want) + 4096ull;
        while (static_cast<int>(accepted.size()) < want) {
            const int need = want - static_cast<int>(accepted.size());
            std::vector<ArchMask> cand;
            std::vector<std::uint64_t> fl;
            for (int i = 0; i < need; ++i) {
                ArchMask mask = make_candidate();
                ++attempts;
                const std::uint64_t flops = arch_cost(spec, mask).flops;
                if (flops > cfg.flops_max) continue;
                cand.push_back(std::move(mask));
                fl.push_back(flops);
            }
            const std::vector<double> accs = pool.score(cand, fl, gen);
            for (std::size_t i = 0; i < cand.size(); ++i) {
                if (accs[i] <= cfg.acc_min) continue;
                Individual ind;
                ind.mask = cand[i];
                ind.accuracy = accs[i];
                ind.flops = fl[i];
                accepted.push_back(std::move(ind));
            }
            if (static_cast<int>(accepted.size()) < want && attempts > guard)
                throw SearchTimeout("run_nsga2: constraints rejected " +
                                    std::to_string(attempts) +
                                    " candidates in a row; acc_min/flops_max look infeasible");
        }
        return accepted;
    };

    SearchResult result;
    std::vector<Individual> parents =
        fill(n, 0, [&] { return sample_mask(spec, 0.5, init_rng); });
    std::vector<Individual> offspring =
        fill(n, 0, [&] { return sample_mask(spec, 0.5, init_rng); });

    {
        std::vector<std::vector<int>> fronts;
        sort_and_crowd(parents, fronts, cfg);
        result.generations.push_back(stat_of(parents, 0));
    }

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        std::vector<Individual> merged = parents;
        merged.insert(merged.end(), offspring.begin(), offspring.end());
        std::vector<std::vector<int>> fronts;
        sort_and_crowd(merged, fronts, cfg);
        parents = select_best(merged, fronts, n);

        offspring = fill(n, gen, [&] {
            const int pa = tournament_select(parents, cfg.tournament, tour_rng);
            const int pb = tournament_select(parents, cfg.tournament, tour_rng);
            ArchMask child = cross_rng.bernoulli(cfg.crossover_rate)
                                 ? crossover_masks(parents[static_cast<std::size_t>(pa)].mask,
                                                   parents[static_cast<std::size_t>(pb)].mask,
                                                   cross_rng)
                                 : parents[static_cast<std::size_t>(pa)].mask;
            mutate_mask(child, spec, cfg.mutation_rate, mut_rng);
            return child;
        });
        result.generations.push_back(stat_of(parents, gen));
    }

    // final population: best n of the last parent/offspring union, re-ranked
    // so rank 0 is non-dominated within what is returned
    std::vector<Individual> merged = std::move(parents);
    merged.insert(merged.end(), offspring.begin(), offspring.end());
    std::vector<std::vector<int>> fronts;
    sort_and_crowd(merged, fronts, cfg);
    result.population = select_best(merged, fronts, n);
    sort_and_crowd(result.population, fronts, cfg);

    std::vector<int> front0;
    for (int i = 0; i < static_cast<int>(result.population.size()); ++i)
        if (result.population[static_cast<std::size_t>(i)].rank == 0) front0.push_back(i);
    sort_front_indices(front0, result.population);
    const int width = static_cast<int>(front0.size());
    if (width <= cfg.pareto_picks) {
        for (int idx : front0)
            result.picks.push_back(result.population[static_cast<std::size_t>(idx)]);
    } else {
        for (int j = 0; j < cfg.pareto_picks; ++j) {
            const int pos = cfg.pareto_picks == 1
                                ? 0
                                : static_cast<int>(std::llround(
                                      static_cast<double>(j) * (width - 1) /
                                      (cfg.pareto_picks - 1)));
            result.picks.push_back(
                result.population[static_cast<std::size_t>(front0[static_cast<std::size_t>(pos)])]);
        }
    }

    std::map<std::string, std::pair<int, double>> final_of;
    for (const Individual& ind : result.population)
        final_of.emplace(mask_to_string(ind.mask), std::make_pair(ind.rank, ind.crowding));
    result.audit = std::move(pool.audit);
    for (AuditRow& row : result.audit) {
        const auto it = final_of.find(mask_to_string(row.mask));
        if (it != final_of.end()) {
            row.rank = it->second.first;
            row.crowding = it->second.second;
        }
    }
    result.evaluations = pool.spent;
    return result;
}

RandomSearchResult run_random_search(const SearchSpaceSpec& spec, std::uint64_t budget,
                                     std::uint64_t flops_max, const Evaluator& evaluate,
                                     const Rng& rng, int workers) {
    validate(spec);
    if (budget < 1) throw std::invalid_argument("run_random_search: budget must be >= 1");
    if (workers < 1) throw std::invalid_argument("run_random_search: workers must be >= 1");

    Rng sample_rng = rng.split("random-search");
    EvalPool pool{evaluate, workers, budget, {}, {}, 0};
    std::vector<Individual> evaluated;
    const std::uint64_t distinct = space_size(spec);
    const std::uint64_t guard = 4096ull * budget + 4096ull;
    std::uint64_t attempts = 0;

    while (pool.spent < budget && pool.spent < distinct && attempts <= guard) {
        const std::uint64_t need = budget - pool.spent;
        std::vector<ArchMask> cand;
        std::vector<std::uint64_t> fl;
        for (std::uint64_t i = 0; i < need; ++i) {
            ArchMask mask = sample_mask(spec, 0.5, sample_rng);
            ++attempts;
            const std::uint64_t flops = arch_cost(spec, mask).flops;
            if (flops > flops_max) continue;
            cand.push_back(std::move(mask));
            fl.push_back(flops);
        }
        const std::size_t before = pool.audit.size();
        (void)pool.score(cand, fl, 0);
        for (std::size_t i = before; i < pool.audit.size(); ++i) {
            Individual ind;
            ind.mask = pool.audit[i].mask;
            ind.accuracy = pool.audit[i].accuracy;
            ind.flops = pool.audit[i].flops;
            evaluated.push_back(std::move(ind));
        }
    }
    if (evaluated.empty())
        throw SearchTimeout("run_random_search: no candidate passed the flops cap");

    RandomSearchResult result;
    std::vector<std::vector<int>> fronts = non_dominated_sort(evaluated);
    std::vector<int> front0 = fronts.front();
    sort_front_indices(front0, evaluated);
    for (int idx : front0) result.front.push_back(evaluated[static_cast<std::size_t>(idx)]);
    result.audit = std::move(pool.audit);
    for (AuditRow& row : result.audit) row.rank = -1;
    std::unordered_set<std::string> on_front;
    for (const Individual& ind : result.front) on_front.insert(mask_to_string(ind.mask));
    for (AuditRow& row : result.audit)
        if (on_front.count(mask_to_string(row.mask))) row.rank = 0;
    result.evaluations = pool.spent;
    return result;
}

double hypervolume2d(const std::vector<Individual>& points, double acc_ref,
                     std::uint64_t flops_ref) {
    std::vector<const Individual*> kept;
    for (const Individual& p : points) {
        check_evaluated(p, "hypervolume2d");
        if (p.accuracy > acc_ref && p.flops < flops_ref) kept.push_back(&p);
    }
    if (kept.empty()) return 0.0;
    std::sort(kept.begin(), kept.end(), [](const Individual* a, const Individual* b) {
        if (a->flops != b->flops) return a->flops < b->flops;
        return a->accuracy < b->accuracy;
    });
    double area = 0.0;
    double best = acc_ref;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        best = std::max(best, kept[i]->accuracy);
        const std::uint64_t next =
            i + 1 < kept.size() ? kept[i + 1]->flops : flops_ref;
        if (next > kept[i]->flops)
            area += static_cast<double>(next - kept[i]->flops) * (best - acc_ref);
    }
    return area;
}

void save_audit_jsonl(const SearchResult& result, const std::string& path) {
    auto out = open_out(path, "save_audit_jsonl");
    for (const AuditRow& row : result.audit) out << row_json(row).dump() << '\n';
}

void save_picks_json(const std::vector<Individual>& picks, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Individual& ind : picks) {
        nlohmann::json j;
        j["mask"] = mask_to_string(ind.mask);
        j["acc"] = ind.accuracy;
        j["flops"] = ind.flops;
        j["rank"] = ind.rank;
        j["crowding"] = ind.crowding;
        arr.push_back(std::move(j));
    }
    auto out = open_out(path, "save_picks_json");
    out << arr.dump(2) << '\n';
}

} // namespace mixpath
