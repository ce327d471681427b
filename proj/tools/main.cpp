#include <CLI11.hpp>

#include "mixpath/bench.hpp"
#include "mixpath/checkpoint.hpp"
#include "mixpath/config.hpp"
#include "mixpath/cost.hpp"
#include "mixpath/nsga2.hpp"
#include "mixpath/ranking.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

using namespace mixpath;

namespace {

struct Invocation {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = 1;
};

RunConfig resolve_config(const Invocation& inv) {
    nlohmann::json doc = nlohmann::json::object();
    if (!inv.config_path.empty()) doc = read_config_file(inv.config_path);
    for (const std::string& assignment : inv.overrides) apply_override(doc, assignment);
    if (inv.seed_given) doc["seed"] = inv.seed;
    return config_from_json(doc);
}

std::filesystem::path prepare_run_dir(const RunConfig& cfg, const Invocation& inv) {
    const std::filesystem::path dir = run_dir(cfg, inv.out);
    std::filesystem::create_directories(dir / "stats");
    save_config(cfg, (dir / "config.json").string());
    return dir;
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << doc.dump(2) << '\n';
}

Supernet load_trained(const RunConfig& cfg, const std::filesystem::path& dir) {
    const std::string path = (dir / "checkpoint.mxpt").string();
    if (!std::filesystem::exists(path))
        throw MissingInput("checkpoint not found (run `mixpath train` first): " + path);
    const CheckpointMeta meta = read_checkpoint_meta(path);
    if (meta.fingerprint != config_fingerprint(cfg))
        throw MissingInput("checkpoint " + path +
                           " belongs to a different space/data configuration (fingerprint " +
                           meta.fingerprint + ", expected " + config_fingerprint(cfg) + ")");
    Supernet net = build_supernet(spec_of(cfg), Rng(cfg.seed).split("init"));
    load_checkpoint(net, path);
    return net;
}

BenchTable load_oracle(const RunConfig& cfg, const std::filesystem::path& dir) {
    const std::string path = (dir / "bench.jsonl").string();
    if (!std::filesystem::exists(path))
        throw MissingInput("oracle table not found (run `mixpath oracle` first): " + path);
    BenchTable table = load_bench(path);
    const std::string want = bench_fingerprint(spec_of(cfg), hyper_of(cfg));
    if (table.fingerprint != want)
        throw MissingInput("oracle table " + path +
                           " was built under different settings (fingerprint " +
                           table.fingerprint + ", expected " + want + ")");
    return table;
}

int cmd_gen_data(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const RunData d = datasets_of(cfg);
    std::filesystem::create_directories(dir / "data");
    save_dataset(d.train, (dir / "data" / "train.mxds").string());
    save_dataset(d.eval, (dir / "data" / "eval.mxds").string());
    save_dataset(d.calib, (dir / "data" / "calib.mxds").string());
    std::cout << "data: " << d.train.size() << " train / " << d.eval.size() << " eval / "
              << d.calib.size() << " calib images in " << (dir / "data").string() << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const SearchSpaceSpec spec = spec_of(cfg);
    const RunData d = datasets_of(cfg);
    Supernet net = build_supernet(spec, Rng(cfg.seed).split("init"));

    ProbeConfig probe;
    probe.every = cfg.train_probe_every;
    probe.models = cfg.train_probe_models;
    probe.eval_set = &d.eval;
    const TrainResult result =
        train_supernet(net, d.train, hyper_of(cfg), Rng(cfg.seed).split("train"),
                       cfg.train_probe_every > 0 ? &probe : nullptr);
    if (!result.probes.empty())
        save_probe_csv(result.probes, (dir / "stats" / "probe.csv").string());

    CheckpointMeta meta;
    meta.fingerprint = config_fingerprint(cfg);
    meta.config_hash = config_hash(cfg);
    meta.seed = cfg.seed;
    save_checkpoint(net, (dir / "checkpoint.mxpt").string(), meta);

    std::cout << "train: " << cfg.train_epochs << " epochs";
    if (!result.epochs.empty())
        std::cout << ", final mean loss " << result.epochs.back().mean_loss;
    std::cout << ", checkpoint " << (dir / "checkpoint.mxpt").string() << "\n";
    return 0;
}

int cmd_oracle(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const SearchSpaceSpec spec = spec_of(cfg);
    const RunData d = datasets_of(cfg);

    std::vector<ArchMask> masks = enumerate_space(spec);
    if (cfg.oracle_sample_count < static_cast<int>(masks.size())) {
        Rng rng = Rng(cfg.seed).split("oracle-sample");
        for (int i = 0; i < cfg.oracle_sample_count; ++i) {
            const std::size_t j = i + rng.uniform_int(masks.size() - i);
            std::swap(masks[i], masks[j]);
        }
        masks.resize(cfg.oracle_sample_count);
    }
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < cfg.oracle_seeds; ++i)
        seeds.push_back(Rng(cfg.seed).split("oracle-train", i).next_u64());

    const BenchTable table =
        build_bench(spec, masks, seeds, d.train, d.eval, hyper_of(cfg), inv.workers);
    verify_bench(table, spec);
    save_bench(table, (dir / "bench.jsonl").string());
    std::cout << "oracle: " << table.rows.size() << " models x " << seeds.size()
              << " seeds, completeness " << table.completeness << "\n";
    return 0;
}

int cmd_rank(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const RunData d = datasets_of(cfg);
    const BenchTable oracle = load_oracle(cfg, dir);
    if (static_cast<std::size_t>(cfg.rank_sample_count) > oracle.rows.size())
        throw MissingInput("rank.sample_count (" + std::to_string(cfg.rank_sample_count) +
                           ") exceeds oracle size (" + std::to_string(oracle.rows.size()) + ")");

    RankingConfig rc;
    rc.sample_count = cfg.rank_sample_count;
    rc.calibrate = cfg.rank_calibrate;
    rc.calib_batches = cfg.calib_batches;
    rc.batch_size = cfg.calib_batch_size;
    rc.workers = inv.workers;
    rc.seed = cfg.seed;

    {
        const Supernet net = load_trained(cfg, dir);
        const RankingReport report = ranking_experiment(net, oracle, d.eval, d.calib, rc);
        save_ranking_csv(report, (dir / "rank.csv").string());
        save_ranking_json(report, (dir / "rank.json").string());
        std::cout << "rank: tau(" << report.sbn_mode
                  << (report.calibrated ? ", calibrated" : ", raw") << ") = " << report.tau
                  << " over " << report.entries.size() << " models\n";
    }

    if (cfg.rank_ablation) {
        // paired grid: per training seed one vanilla and one sbn supernet,
        // each scored raw and calibrated against the same oracle sample
        nlohmann::json cells = nlohmann::json::array();
        for (const char* mode : {"vanilla", "linear"}) {
            RunConfig mode_cfg = cfg;
            mode_cfg.space_sbn_mode = mode;
            const SearchSpaceSpec mode_spec = spec_of(mode_cfg);
            std::vector<double> taus_raw;
            std::vector<double> taus_cal;
            for (int i = 0; i < cfg.rank_seeds; ++i) {
                const std::uint64_t s = Rng(cfg.seed).split("ablation-train", i).next_u64();
                Supernet net = build_supernet(mode_spec, Rng(s).split("init"));
                train_supernet(net, d.train, hyper_of(cfg), Rng(s).split("train"));
                for (const bool calibrated : {false, true}) {
                    RankingConfig cell = rc;
                    cell.calibrate = calibrated;
                    const RankingReport rep = ranking_experiment(net, oracle, d.eval, d.calib, cell);
                    (calibrated ? taus_cal : taus_raw).push_back(rep.tau);
                }
            }
            for (const bool calibrated : {false, true}) {
                const std::vector<double>& taus = calibrated ? taus_cal : taus_raw;
                const double mean =
                    std::accumulate(taus.begin(), taus.end(), 0.0) / taus.size();
                cells.push_back({{"sbn_mode", mode},
                                 {"calibrated", calibrated},
                                 {"taus", taus},
                                 {"mean_tau", mean}});
            }
        }
        nlohmann::json grid;
        grid["config_hash"] = config_hash(cfg);
        grid["samples"] = cfg.rank_sample_count;
        grid["train_seeds"] = cfg.rank_seeds;
        grid["cells"] = cells;
        write_json(grid, dir / "rank_grid.json");
        std::cout << "rank: ablation grid in " << (dir / "rank_grid.json").string() << "\n";
    }
    return 0;
}

int cmd_search(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const SearchSpaceSpec spec = spec_of(cfg);
    const RunData d = datasets_of(cfg);
    const Supernet net = load_trained(cfg, dir);
    const Evaluator evaluate = supernet_evaluator(net, d.eval, true, &d.calib,
                                                  cfg.calib_batches, cfg.calib_batch_size);
    SearchConfig sc = search_of(cfg);
    sc.workers = inv.workers;

    const SearchResult result = run_nsga2(spec, sc, evaluate, Rng(cfg.seed).split("search"));
    save_audit_jsonl(result, (dir / "search.jsonl").string());
    save_picks_json(result.picks, (dir / "picks.json").string());

    const double acc_ref = 1.0 / spec.num_classes;
    const std::uint64_t flops_ref = max_space_flops(spec);
    std::vector<Individual> front;
    for (const Individual& ind : result.population)
        if (ind.rank == 0) front.push_back(ind);

    nlohmann::json summary;
    summary["config_hash"] = config_hash(cfg);
    summary["evaluations"] = result.evaluations;
    summary["front_size"] = front.size();
    summary["acc_ref"] = acc_ref;
    summary["flops_ref"] = flops_ref;
    const double hv = hypervolume2d(front, acc_ref, flops_ref);
    summary["hypervolume"] = hv;
    nlohmann::json gens = nlohmann::json::array();
    for (const GenStat& g : result.generations)
        gens.push_back({{"gen", g.gen},
                        {"best_acc", g.best_acc},
                        {"best_flops", g.best_flops},
                        {"front0_size", g.front0_size}});
    summary["gen_stats"] = gens;

    if (cfg.search_random_baseline) {
        const RandomSearchResult random = run_random_search(
            spec, result.evaluations, sc.flops_max, evaluate,
            Rng(cfg.seed).split("random-baseline"), inv.workers);
        summary["random_evaluations"] = random.evaluations;
        summary["random_hypervolume"] = hypervolume2d(random.front, acc_ref, flops_ref);
    }
    write_json(summary, dir / "search_summary.json");

    std::cout << "search: " << result.evaluations << " evaluations, front " << front.size()
              << ", hypervolume " << hv;
    if (summary.contains("random_hypervolume"))
        std::cout << " (random baseline " << summary["random_hypervolume"].get<double>() << ")";
    std::cout << "\n";
    return 0;
}

int cmd_stats(const RunConfig& cfg, const Invocation& inv) {
    const auto dir = prepare_run_dir(cfg, inv);
    const SearchSpaceSpec spec = spec_of(cfg);
    const RunData d = datasets_of(cfg);
    const Supernet net = load_trained(cfg, dir);

    nlohmann::json summary;
    summary["config_hash"] = config_hash(cfg);
    summary["sbn_mode"] = cfg.space_sbn_mode;

    if (spec.sbn_mode != SbnMode::Vanilla) {
        const SbnStatsDump dump = sbn_stats(net);
        save_sbn_stats_csv(dump, (dir / "stats" / "sbn_stats.csv").string());
        save_sbn_ratios_csv(dump, (dir / "stats" / "sbn_ratios.csv").string());
        nlohmann::json medians = nlohmann::json::array();
        for (const auto& block : dump.blocks)
            for (const SbnRatio& ratio : block.ratios)
                medians.push_back({{"block", block.block},
                                   {"k", ratio.k},
                                   {"median_mean_ratio", ratio.median_mean_ratio},
                                   {"median_var_ratio", ratio.median_var_ratio}});
        summary["sbn_ratio_medians"] = medians;
    }

    const std::size_t probe_n =
        std::min<std::size_t>(d.eval.size(), static_cast<std::size_t>(cfg.calib_batch_size));
    std::vector<std::size_t> indices(probe_n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    const Batch probe = make_batch(d.eval, indices);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const SimilarityMatrix sim = feature_similarity(net, static_cast<int>(b), probe.images);
        save_similarity_csv(
            sim, (dir / "stats" / ("similarity_b" + std::to_string(b) + ".csv")).string());
    }
    summary["blocks"] = net.blocks.size();
    write_json(summary, dir / "stats" / "summary.json");
    std::cout << "stats: wrote " << (dir / "stats").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-path one-shot architecture search with shadow batch normalization"};
    app.require_subcommand(1);

    Invocation inv;
    const auto add_common = [&inv](CLI::App* sub) {
        sub->add_option("--config", inv.config_path, "JSON config file (defaults apply without it)");
        sub->add_option("--set", inv.overrides, "key=value config override (repeatable)");
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&inv](std::uint64_t value) {
                inv.seed = value;
                inv.seed_given = true;
            },
            "master seed, overrides the config's seed key");
        sub->add_option("--workers", inv.workers, "parallel evaluation workers")
            ->check(CLI::Range(1, 4096));
        sub->add_option("--out", inv.out, "output root (else $MIXPATH_RUNS_DIR, else ./runs)");
    };

    add_common(app.add_subcommand("gen-data", "materialize the synthetic datasets"));
    add_common(app.add_subcommand("train", "train the weight-sharing supernet"));
    add_common(app.add_subcommand("oracle", "train standalone models into a ground-truth table"));
    add_common(app.add_subcommand("rank", "score the supernet's ranking against the oracle"));
    add_common(app.add_subcommand("search", "multi-objective evolutionary search on the supernet"));
    add_common(app.add_subcommand("stats", "dump shadow-bank statistics and feature similarity"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = resolve_config(inv);
        if (app.got_subcommand("gen-data")) return cmd_gen_data(cfg, inv);
        if (app.got_subcommand("train")) return cmd_train(cfg, inv);
        if (app.got_subcommand("oracle")) return cmd_oracle(cfg, inv);
        if (app.got_subcommand("rank")) return cmd_rank(cfg, inv);
        if (app.got_subcommand("search")) return cmd_search(cfg, inv);
        if (app.got_subcommand("stats")) return cmd_stats(cfg, inv);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingInput& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
