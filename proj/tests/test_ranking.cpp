#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mixpath/ranking.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
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

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// reference tau-b by full pair enumeration, sharing only the final formula
// shape with the fast path so integer agreement forces bitwise agreement
double kendall_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    std::int64_t con = 0, dis = 0, tie_a = 0, tie_b = 0, tie_both = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool ea = a[i] == a[j];
            const bool eb = b[i] == b[j];
            if (ea && eb)
                ++tie_both;
            else if (ea)
                ++tie_a;
            else if (eb)
                ++tie_b;
            else if ((a[i] < a[j]) == (b[i] < b[j]))
                ++con;
            else
                ++dis;
        }
    const std::int64_t n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const std::int64_t n1 = tie_a + tie_both;
    const std::int64_t n2 = tie_b + tie_both;
    if (n0 == n1 || n0 == n2) throw NumericError("oracle: all tied");
    return static_cast<double>(con - dis) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

SearchSpaceSpec tiny_spec(SbnMode mode = SbnMode::Linear) {
    SearchSpaceSpec spec = make_space(2, {3, 5}, 2, 1.5);
    spec.image_hw = 10;
    spec.stem_channels = 6;
    spec.num_classes = 3;
    spec.sbn_mode = mode;
    return spec;
}

// same shape but with equal kernels so paths can be tied
SearchSpaceSpec tied_spec() {
    SearchSpaceSpec spec = make_space(2, {3, 3}, 2, 1.5);
    spec.image_hw = 10;
    spec.stem_channels = 6;
    spec.num_classes = 3;
    return spec;
}

// oracle table with fabricated distinct ground truth, one row per mask
BenchTable fake_oracle(const SearchSpaceSpec& spec) {
    BenchTable table;
    table.fingerprint = "test";
    table.completeness = 1.0;
    const auto masks = enumerate_space(spec);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        BenchRecord row;
        row.mask = masks[i];
        row.accuracy = 0.05 + 0.09 * static_cast<double>(i);
        row.seed_accuracies = {row.accuracy};
        table.rows.push_back(std::move(row));
    }
    return table;
}

Tensor probe_images(int hw, int count, std::uint64_t seed) {
    const Dataset ds = gen_synthetic(seed, count, hw, 3);
    std::vector<std::size_t> idx(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
    return make_batch(ds, idx).images;
}

} // namespace

TEST_CASE("kendall tau matches the pair enumeration oracle") {
    Rng rng(2024);

    int compared = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(120);
        const bool heavy_ties = trial % 2 == 0;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (heavy_ties) {
                a[i] = static_cast<double>(rng.uniform_int(5));
                b[i] = static_cast<double>(rng.uniform_int(5));
            } else {
                a[i] = rng.normal();
                b[i] = 0.3 * a[i] + rng.normal();
            }
        }

        bool oracle_threw = false;
        double want = 0.0;
        try {
            want = kendall_oracle(a, b);
        } catch (const NumericError&) {
            oracle_threw = true;
        }
        if (oracle_threw) {
            CHECK_THROWS_AS((void)kendall_tau(a, b), NumericError);
            continue;
        }
        const double got = kendall_tau(a, b);
        CHECK(got == want); // integer pair counts, identical formula: bitwise
        ++compared;
    }
    CHECK(compared > 300);
}

TEST_CASE("kendall tau hand values and invariances") {
    const std::vector<double> up = {1, 2, 3, 4, 5};
    const std::vector<double> down = {5, 4, 3, 2, 1};
    CHECK(kendall_tau(up, up) == 1.0);
    CHECK(kendall_tau(up, down) == -1.0);
    CHECK(kendall_tau({1, 2, 3}, {1, 3, 2}) == 1.0 / 3.0);

    // one tie in each list, checked against the oracle by hand:
    // a = [1,1,2,3], b = [1,2,2,3]: con 4, dis 0, ties 1+1 -> 4/sqrt(5*5)
    CHECK(kendall_tau({1, 1, 2, 3}, {1, 2, 2, 3}) == 4.0 / 5.0);

    Rng rng(11);
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<double>(rng.uniform_int(9));
        b[i] = rng.normal();
    }
    CHECK(kendall_tau(a, b) == kendall_tau(b, a));

    // strictly increasing transforms preserve order and tie structure
    std::vector<double> scaled(a);
    for (double& v : scaled) v = 2.0 * v + 7.0;
    CHECK(kendall_tau(scaled, b) == kendall_tau(a, b));
}

TEST_CASE("kendall tau rejects degenerate input") {
    CHECK_THROWS_AS((void)kendall_tau({1, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS((void)kendall_tau({1}, {2}), std::invalid_argument);
    CHECK_THROWS_AS((void)kendall_tau({}, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)kendall_tau({3, 3, 3}, {1, 2, 3}), NumericError);
    CHECK_THROWS_AS((void)kendall_tau({1, 2, 3}, {5, 5, 5}), NumericError);
}

TEST_CASE("ranking experiment is deterministic and worker invariant") {
    const SearchSpaceSpec spec = tiny_spec();
    const Supernet net = build_supernet(spec, Rng(3));
    const Dataset eval_set = gen_synthetic(21, 150, 10, 3);
    const Dataset calib_set = gen_synthetic(22, 128, 10, 3);
    const BenchTable oracle = fake_oracle(spec);
    REQUIRE(oracle.rows.size() == 9);

    RankingConfig cfg;
    cfg.sample_count = 6;
    cfg.calibrate = true;
    cfg.calib_batches = 2;
    cfg.batch_size = 32;
    cfg.seed = 5;

    cfg.workers = 1;
    const RankingReport serial = ranking_experiment(net, oracle, eval_set, calib_set, cfg);
    cfg.workers = 3;
    const RankingReport threaded = ranking_experiment(net, oracle, eval_set, calib_set, cfg);

    REQUIRE(serial.entries.size() == 6);
    REQUIRE(threaded.entries.size() == 6);
    CHECK(serial.tau == threaded.tau);
    for (std::size_t i = 0; i < serial.entries.size(); ++i) {
        CHECK(serial.entries[i].mask == threaded.entries[i].mask);
        CHECK(serial.entries[i].oneshot == threaded.entries[i].oneshot);
        CHECK(serial.entries[i].truth == threaded.entries[i].truth);
    }

    // sampling is without replacement
    std::set<std::string> seen;
    for (const RankingEntry& e : serial.entries) seen.insert(mask_to_string(e.mask));
    CHECK(seen.size() == serial.entries.size());

    // every truth really comes from the oracle row of the sampled mask
    std::map<std::string, double> truth_of;
    for (const BenchRecord& row : oracle.rows) truth_of[mask_to_string(row.mask)] = row.accuracy;
    for (const RankingEntry& e : serial.entries)
        CHECK(e.truth == truth_of.at(mask_to_string(e.mask)));

    // tags echo the setup
    CHECK(serial.sbn_mode == "linear");
    CHECK(serial.calibrated);
    CHECK(serial.seed == 5);

    // a different seed draws a different sample
    cfg.workers = 1;
    cfg.seed = 6;
    const RankingReport other = ranking_experiment(net, oracle, eval_set, calib_set, cfg);
    std::vector<std::string> first, second;
    for (const RankingEntry& e : serial.entries) first.push_back(mask_to_string(e.mask));
    for (const RankingEntry& e : other.entries) second.push_back(mask_to_string(e.mask));
    CHECK(first != second);
}

TEST_CASE("ranking experiment against its own predictions scores tau one") {
    const SearchSpaceSpec spec = tiny_spec();
    const Supernet net = build_supernet(spec, Rng(9));
    const Dataset eval_set = gen_synthetic(31, 120, 10, 3);
    const Dataset calib_set = gen_synthetic(32, 96, 10, 3);
    BenchTable oracle = fake_oracle(spec);

    RankingConfig cfg;
    cfg.sample_count = 7;
    cfg.calibrate = false;
    cfg.seed = 1;

    const RankingReport first = ranking_experiment(net, oracle, eval_set, calib_set, cfg);

    // rewrite the ground truth to be the supernet's own scores and rerun
    std::map<std::string, double> predicted;
    for (const RankingEntry& e : first.entries) predicted[mask_to_string(e.mask)] = e.oneshot;
    for (BenchRecord& row : oracle.rows) {
        const auto it = predicted.find(mask_to_string(row.mask));
        if (it != predicted.end()) row.accuracy = it->second;
    }
    const RankingReport second = ranking_experiment(net, oracle, eval_set, calib_set, cfg);
    for (const RankingEntry& e : second.entries) CHECK(e.truth == e.oneshot);
    CHECK(second.tau == 1.0);
}

TEST_CASE("ranking experiment calibration changes the predictions") {
    const SearchSpaceSpec spec = tiny_spec();
    Supernet net = build_supernet(spec, Rng(13));
    const Dataset train = gen_synthetic(41, 160, 10, 3);
    const Dataset eval_set = gen_synthetic(42, 150, 10, 3);
    TrainHyper hyper;
    hyper.epochs = 2;
    hyper.batch_size = 32;
    (void)train_supernet(net, train, hyper, Rng(43));

    BenchTable oracle = fake_oracle(spec);
    RankingConfig cfg;
    cfg.sample_count = 6;
    cfg.calib_batches = 3;
    cfg.batch_size = 32;
    cfg.seed = 2;

    cfg.calibrate = true;
    const RankingReport with_calib = ranking_experiment(net, oracle, eval_set, train, cfg);
    cfg.calibrate = false;
    const RankingReport without = ranking_experiment(net, oracle, eval_set, train, cfg);

    CHECK(with_calib.calibrated);
    CHECK_FALSE(without.calibrated);
    bool any_differs = false;
    for (std::size_t i = 0; i < with_calib.entries.size(); ++i)
        if (with_calib.entries[i].oneshot != without.entries[i].oneshot) any_differs = true;
    CHECK(any_differs);
}

TEST_CASE("ranking experiment rejects bad input") {
    const SearchSpaceSpec spec = tiny_spec();
    const Supernet net = build_supernet(spec, Rng(3));
    const Dataset eval_set = gen_synthetic(21, 64, 10, 3);
    const BenchTable oracle = fake_oracle(spec);

    RankingConfig cfg;
    cfg.sample_count = 1;
    CHECK_THROWS_AS((void)ranking_experiment(net, oracle, eval_set, eval_set, cfg),
                    std::invalid_argument);
    cfg.sample_count = static_cast<int>(oracle.rows.size()) + 1;
    CHECK_THROWS_AS((void)ranking_experiment(net, oracle, eval_set, eval_set, cfg),
                    std::invalid_argument);
    cfg.sample_count = 4;
    const Dataset empty;
    CHECK_THROWS_AS((void)ranking_experiment(net, oracle, empty, eval_set, cfg),
                    std::invalid_argument);
}

TEST_CASE("stability probe emits the scheduled time series") {
    const SearchSpaceSpec spec = tiny_spec();
    const Dataset train = gen_synthetic(51, 96, 10, 3);
    const Dataset eval_set = gen_synthetic(52, 96, 10, 3);
    TrainHyper hyper;
    hyper.epochs = 2;
    hyper.batch_size = 32;

    const auto series = stability_probe(spec, train, eval_set, hyper, 1, 2, Rng(7));
    REQUIRE(series.size() == 3);
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(series[i].epoch == static_cast<int>(i));
        REQUIRE(series[i].accs.size() == 2);
        double sum = 0.0;
        for (double v : series[i].accs) sum += v;
        CHECK(series[i].mean_acc == doctest::Approx(sum / 2.0).epsilon(1e-12));
        CHECK(series[i].var_acc >= 0.0);
    }

    const auto again = stability_probe(spec, train, eval_set, hyper, 1, 2, Rng(7));
    REQUIRE(again.size() == series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(again[i].mean_acc == series[i].mean_acc);
        CHECK(again[i].var_acc == series[i].var_acc);
        CHECK(again[i].accs == series[i].accs);
    }

    CHECK_THROWS_AS((void)stability_probe(spec, train, eval_set, hyper, 0, 2, Rng(7)),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)stability_probe(spec, train, eval_set, hyper, 1, 1, Rng(7)),
                    std::invalid_argument);
}

TEST_CASE("sbn stats on a fresh net: unit ratios where defined") {
    const SearchSpaceSpec spec = tiny_spec();
    const Supernet net = build_supernet(spec, Rng(5));

    const SbnStatsDump dump = sbn_stats(net);
    REQUIRE(dump.blocks.size() == 2);
    for (const auto& bd : dump.blocks) {
        REQUIRE(bd.keys.size() == 2); // linear bank, m = 2
        CHECK(bd.keys[0].key == 1);
        CHECK(bd.keys[1].key == 2);
        REQUIRE(bd.ratios.size() == 1);
        const SbnRatio& r = bd.ratios[0];
        CHECK(r.k == 2);
        // fresh BN: mean 0 (ratio undefined), var 1, gamma 1, beta 0
        CHECK(r.mean_ratio.empty());
        CHECK(r.beta_ratio.empty());
        REQUIRE_FALSE(r.var_ratio.empty());
        for (double v : r.var_ratio) CHECK(v == 1.0);
        for (double v : r.gamma_ratio) CHECK(v == 1.0);
        CHECK(r.median_var_ratio == 1.0);
    }

    SearchSpaceSpec vspec = tiny_spec(SbnMode::Vanilla);
    const Supernet vnet = build_supernet(vspec, Rng(5));
    CHECK_THROWS_AS((void)sbn_stats(vnet), std::invalid_argument);
}

TEST_CASE("sbn stats ratio arithmetic on hand written statistics") {
    const SearchSpaceSpec spec = tiny_spec();
    Supernet net = build_supernet(spec, Rng(5));

    TrainableBn& one = net.blocks[0].sbn.at(1);
    TrainableBn& two = net.blocks[0].sbn.at(2);
    const int channels = one.bn.channels();
    REQUIRE(channels >= 3);
    for (int c = 0; c < channels; ++c) {
        one.bn.running_mean[c] = 3.0;
        two.bn.running_mean[c] = 6.0;
        one.bn.running_var[c] = 8.0;
        two.bn.running_var[c] = 32.0;
    }
    // make one channel's denominator vanish and another's ratio an outlier
    two.bn.running_mean[0] = 0.0;
    two.bn.running_mean[1] = 1.5;

    const SbnStatsDump dump = sbn_stats(net);
    const SbnRatio& r = dump.blocks[0].ratios[0];
    REQUIRE(static_cast<int>(r.mean_ratio.size()) == channels - 1);
    CHECK(r.mean_ratio[0] == 2.0); // channel 1: 3 / 1.5
    for (std::size_t i = 1; i < r.mean_ratio.size(); ++i) CHECK(r.mean_ratio[i] == 0.5);
    CHECK(r.median_mean_ratio == 0.5);
    REQUIRE(static_cast<int>(r.var_ratio.size()) == channels);
    for (double v : r.var_ratio) CHECK(v == 0.25);
    CHECK(r.median_var_ratio == 0.25);
}

TEST_CASE("sbn stats averages subset keys of equal cardinality") {
    const SearchSpaceSpec spec = tiny_spec(SbnMode::Exponential);
    Supernet net = build_supernet(spec, Rng(5));

    Block& blk = net.blocks[0];
    REQUIRE(blk.sbn.size() == 3); // keys 1, 2, 3 for two paths
    const int channels = blk.sbn.at(1).bn.channels();
    for (int c = 0; c < channels; ++c) {
        blk.sbn.at(1).bn.running_mean[c] = 2.0; // cardinality 1
        blk.sbn.at(2).bn.running_mean[c] = 4.0; // cardinality 1
        blk.sbn.at(3).bn.running_mean[c] = 6.0; // cardinality 2
    }

    const SbnStatsDump dump = sbn_stats(net);
    REQUIRE(dump.blocks[0].keys.size() == 3);
    const SbnRatio& r = dump.blocks[0].ratios[0];
    REQUIRE(static_cast<int>(r.mean_ratio.size()) == channels);
    for (double v : r.mean_ratio) CHECK(v == (2.0 + 4.0) / 2.0 / 6.0);
}

TEST_CASE("feature similarity on tied paths: exact doubling geometry") {
    const SearchSpaceSpec spec = tied_spec();
    Supernet net = build_supernet(spec, Rng(17));
    tie_layer_paths(net);
    const Tensor probe = probe_images(10, 4, 61);

    const SimilarityMatrix sim = feature_similarity(net, 1, probe);
    CHECK(sim.block == 1);
    REQUIRE(sim.selections == std::vector<std::uint32_t>{1, 2, 3});
    REQUIRE(sim.pre_magnitude.size() == 3);

    // tied single paths produce identical features; the pair produces the
    // exact double (power of two scaling survives rounding end to end)
    CHECK(sim.pre_magnitude[0] == sim.pre_magnitude[1]);
    CHECK(sim.pre_magnitude[2] == 2.0 * sim.pre_magnitude[0]);
    CHECK(sim.pre_magnitude[0] > 0.0);

    for (std::size_t i = 0; i < 3; ++i) {
        CHECK_FALSE(sim.degenerate[i]);
        CHECK(sim.cosine[i][i] == 1.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(sim.cosine[i][j] == sim.cosine[j][i]);
            CHECK(sim.cosine[i][j] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // scaling cancels exactly inside the cosine
    CHECK(sim.cosine[0][2] == sim.cosine[0][1]);

    for (double v : sim.post_magnitude) {
        CHECK(v > 0.0);
        CHECK(std::isfinite(v));
    }

    CHECK_THROWS_AS((void)feature_similarity(net, 2, probe), std::invalid_argument);
    CHECK_THROWS_AS((void)feature_similarity(net, -1, probe), std::invalid_argument);
}

TEST_CASE("feature similarity flags zeroed selections as degenerate") {
    const SearchSpaceSpec spec = tiny_spec();
    Supernet net = build_supernet(spec, Rng(19));

    // silence path 1 of block 0: its private BN maps everything to zero
    TrainableBn& bn = net.blocks[0].path_bn[1];
    std::fill(bn.bn.gamma.begin(), bn.bn.gamma.end(), 0.0f);
    std::fill(bn.bn.beta.begin(), bn.bn.beta.end(), 0.0f);

    const Tensor probe = probe_images(10, 3, 62);
    const SimilarityMatrix sim = feature_similarity(net, 0, probe);
    REQUIRE(sim.selections == std::vector<std::uint32_t>{1, 2, 3});

    CHECK_FALSE(sim.degenerate[0]);
    CHECK(sim.degenerate[1]);
    CHECK_FALSE(sim.degenerate[2]);
    CHECK(sim.pre_magnitude[1] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(sim.cosine[1][j] == 0.0);
        CHECK(sim.cosine[j][1] == 0.0);
    }

    // path 0 alone and path 0 plus the silenced path are the same feature
    CHECK(sim.pre_magnitude[0] == sim.pre_magnitude[2]);
    CHECK(sim.cosine[0][2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feature similarity respects the active path cap") {
    SearchSpaceSpec spec = make_space(1, {3, 3, 3}, 2, 1.5);
    spec.image_hw = 10;
    spec.stem_channels = 6;
    spec.num_classes = 3;
    const Supernet net = build_supernet(spec, Rng(23));
    const Tensor probe = probe_images(10, 2, 63);

    const SimilarityMatrix sim = feature_similarity(net, 0, probe);
    // three paths, at most two active: 1,2,3,4,5,6 but not 7
    CHECK(sim.selections == std::vector<std::uint32_t>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("artifact writers emit stable csv and json") {
    const SearchSpaceSpec spec = tiny_spec();
    Supernet net = build_supernet(spec, Rng(3));
    const Dataset eval_set = gen_synthetic(21, 150, 10, 3);
    const Dataset calib_set = gen_synthetic(22, 128, 10, 3);
    const BenchTable oracle = fake_oracle(spec);

    RankingConfig cfg;
    cfg.sample_count = 5;
    cfg.calibrate = true; // calibrated scores differ per mask, so tau is defined
    cfg.calib_batches = 2;
    cfg.batch_size = 32;
    const RankingReport report = ranking_experiment(net, oracle, eval_set, calib_set, cfg);

    const FileGuard csv(temp_path("mixpath_rank_test.csv"));
    const FileGuard json_file(temp_path("mixpath_rank_test.json"));
    save_ranking_csv(report, csv.path);
    save_ranking_json(report, json_file.path);

    const std::string csv_text = slurp(csv.path);
    CHECK(csv_text.rfind("mask,oneshot,truth\n", 0) == 0);
    CHECK(line_count(csv_text) == 6); // header + five entries

    const nlohmann::json j = nlohmann::json::parse(slurp(json_file.path));
    CHECK(j.at("tau").get<double>() == report.tau);
    CHECK(j.at("sbn_mode").get<std::string>() == "linear");
    CHECK(j.at("calibrated").get<bool>() == true);
    CHECK(j.at("samples").get<std::size_t>() == 5);

    save_ranking_csv(report, csv.path);
    CHECK(slurp(csv.path) == csv_text); // rewrite is byte identical

    const Dataset train = gen_synthetic(51, 96, 10, 3);
    TrainHyper hyper;
    hyper.epochs = 1;
    hyper.batch_size = 32;
    const auto series = stability_probe(spec, train, eval_set, hyper, 1, 2, Rng(7));
    const FileGuard probe_csv(temp_path("mixpath_probe_test.csv"));
    save_probe_csv(series, probe_csv.path);
    const std::string probe_text = slurp(probe_csv.path);
    CHECK(probe_text.rfind("epoch,mean_acc,var_acc\n", 0) == 0);
    CHECK(line_count(probe_text) == 1 + series.size());

    const SbnStatsDump dump = sbn_stats(net);
    const FileGuard stats_csv(temp_path("mixpath_sbn_test.csv"));
    const FileGuard ratios_csv(temp_path("mixpath_sbn_ratio_test.csv"));
    save_sbn_stats_csv(dump, stats_csv.path);
    save_sbn_ratios_csv(dump, ratios_csv.path);
    const std::string stats_text = slurp(stats_csv.path);
    CHECK(stats_text.rfind("block,key,channel,mean,var,gamma,beta\n", 0) == 0);
    std::size_t stat_rows = 0;
    for (const auto& bd : dump.blocks)
        for (const auto& key : bd.keys) stat_rows += key.mean.size();
    CHECK(line_count(stats_text) == 1 + stat_rows);
    CHECK(slurp(ratios_csv.path).rfind("block,k,param,ratio\n", 0) == 0);

    const Tensor probe = probe_images(10, 2, 64);
    const SimilarityMatrix sim = feature_similarity(net, 0, probe);
    const FileGuard sim_csv(temp_path("mixpath_sim_test.csv"));
    save_similarity_csv(sim, sim_csv.path);
    const std::string sim_text = slurp(sim_csv.path);
    CHECK(sim_text.rfind("block,sel_a,sel_b,cosine,pre_a,post_a,degenerate_a\n", 0) == 0);
    CHECK(line_count(sim_text) == 1 + sim.selections.size() * sim.selections.size());
}
