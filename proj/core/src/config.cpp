#include "mixpath/config.hpp"

#include "mixpath/hash.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mixpath {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

long long int_of(const nlohmann::json& v, const std::string& key, long long lo, long long hi) {
    if (!v.is_number_integer()) bad(key, "expected an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
        bad(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
    return x;
}

std::uint64_t u64_of(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0))
        bad(key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

double real_of(const nlohmann::json& v, const std::string& key, double lo, double hi,
               bool lo_open = false, bool hi_open = false) {
    if (!v.is_number()) bad(key, "expected a number");
    const double x = v.get<double>();
    const bool below = lo_open ? x <= lo : x < lo;
    const bool above = hi_open ? x >= hi : x > hi;
    if (below || above) {
        std::ostringstream msg;
        msg << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi
            << (hi_open ? ")" : "]");
        bad(key, msg.str());
    }
    return x;
}

bool bool_of(const nlohmann::json& v, const std::string& key) {
    if (!v.is_boolean()) bad(key, "expected true or false");
    return v.get<bool>();
}

std::string enum_of(const nlohmann::json& v, const std::string& key,
                    const std::vector<std::string>& allowed) {
    if (!v.is_string()) bad(key, "expected a string");
    const std::string x = v.get<std::string>();
    for (const std::string& a : allowed)
        if (x == a) return x;
    std::string list;
    for (const std::string& a : allowed) list += (list.empty() ? "" : ", ") + a;
    bad(key, "'" + x + "' is not one of: " + list);
}

std::vector<int> kernels_of(const nlohmann::json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) bad(key, "expected a nonempty array of kernel sizes");
    if (v.size() > 30) bad(key, "at most 30 paths per layer");
    std::vector<int> out;
    for (const auto& e : v) out.push_back(static_cast<int>(int_of(e, key, 1, 31)));
    return out;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "space.layers", "space.kernels", "space.m", "space.expansion", "space.image_hw",
        "space.stem_channels", "space.stem_kernel", "space.stem_stride", "space.classes",
        "space.sbn_mode", "space.aggregation", "space.residual",
        "data.train_count", "data.eval_count", "data.calib_count", "data.seed",
        "train.epochs", "train.batch_size", "train.lr", "train.momentum",
        "train.weight_decay", "train.bernoulli_p", "train.probe_every", "train.probe_models",
        "calib.batches", "calib.batch_size",
        "oracle.sample_count", "oracle.seeds",
        "rank.sample_count", "rank.calibrate", "rank.ablation", "rank.seeds",
        "search.generations", "search.population", "search.acc_min", "search.flops_max",
        "search.w_acc", "search.w_flops", "search.tournament", "search.crossover_rate",
        "search.mutation_rate", "search.picks", "search.eval_cap", "search.random_baseline",
        "seed",
    };
    return keys;
}

} // namespace

RunConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    for (const auto& item : doc.items())
        if (known_keys().count(item.key()) == 0)
            throw ConfigError("unknown config key '" + item.key() + "'");

    RunConfig cfg;
    const auto get = [&](const char* key) -> const nlohmann::json* {
        const auto it = doc.find(key);
        return it == doc.end() ? nullptr : &*it;
    };

    if (const auto* v = get("space.layers"))
        cfg.space_layers = static_cast<int>(int_of(*v, "space.layers", 1, 64));
    if (const auto* v = get("space.kernels")) cfg.space_kernels = kernels_of(*v, "space.kernels");
    if (const auto* v = get("space.m")) cfg.space_m = static_cast<int>(int_of(*v, "space.m", 1, 30));
    if (const auto* v = get("space.expansion"))
        cfg.space_expansion = real_of(*v, "space.expansion", 0.0, 64.0, true);
    if (const auto* v = get("space.image_hw"))
        cfg.space_image_hw = static_cast<int>(int_of(*v, "space.image_hw", 4, 256));
    if (const auto* v = get("space.stem_channels"))
        cfg.space_stem_channels = static_cast<int>(int_of(*v, "space.stem_channels", 1, 512));
    if (const auto* v = get("space.stem_kernel"))
        cfg.space_stem_kernel = static_cast<int>(int_of(*v, "space.stem_kernel", 1, 15));
    if (const auto* v = get("space.stem_stride"))
        cfg.space_stem_stride = static_cast<int>(int_of(*v, "space.stem_stride", 1, 2));
    if (const auto* v = get("space.classes"))
        cfg.space_classes = static_cast<int>(int_of(*v, "space.classes", 2, 1000));
    if (const auto* v = get("space.sbn_mode"))
        cfg.space_sbn_mode = enum_of(*v, "space.sbn_mode", {"vanilla", "linear", "exponential"});
    if (const auto* v = get("space.aggregation"))
        cfg.space_aggregation = enum_of(*v, "space.aggregation", {"sum", "sum_proj"});
    if (const auto* v = get("space.residual")) cfg.space_residual = bool_of(*v, "space.residual");

    if (const auto* v = get("data.train_count"))
        cfg.data_train_count = static_cast<int>(int_of(*v, "data.train_count", 2, 10000000));
    if (const auto* v = get("data.eval_count"))
        cfg.data_eval_count = static_cast<int>(int_of(*v, "data.eval_count", 1, 10000000));
    if (const auto* v = get("data.calib_count"))
        cfg.data_calib_count = static_cast<int>(int_of(*v, "data.calib_count", 1, 10000000));
    if (const auto* v = get("data.seed")) cfg.data_seed = u64_of(*v, "data.seed");

    if (const auto* v = get("train.epochs"))
        cfg.train_epochs = static_cast<int>(int_of(*v, "train.epochs", 0, 1000000));
    if (const auto* v = get("train.batch_size"))
        cfg.train_batch_size = static_cast<int>(int_of(*v, "train.batch_size", 2, 65536));
    if (const auto* v = get("train.lr")) cfg.train_lr = real_of(*v, "train.lr", 0.0, 1000.0, true);
    if (const auto* v = get("train.momentum"))
        cfg.train_momentum = real_of(*v, "train.momentum", 0.0, 1.0, false, true);
    if (const auto* v = get("train.weight_decay"))
        cfg.train_weight_decay = real_of(*v, "train.weight_decay", 0.0, 1.0);
    if (const auto* v = get("train.bernoulli_p"))
        cfg.train_bernoulli_p = real_of(*v, "train.bernoulli_p", 0.0, 1.0, true, true);
    if (const auto* v = get("train.probe_every"))
        cfg.train_probe_every = static_cast<int>(int_of(*v, "train.probe_every", 0, 1000000));
    if (const auto* v = get("train.probe_models"))
        cfg.train_probe_models = static_cast<int>(int_of(*v, "train.probe_models", 2, 4096));

    if (const auto* v = get("calib.batches"))
        cfg.calib_batches = static_cast<int>(int_of(*v, "calib.batches", 1, 1000000));
    if (const auto* v = get("calib.batch_size"))
        cfg.calib_batch_size = static_cast<int>(int_of(*v, "calib.batch_size", 2, 65536));

    if (const auto* v = get("oracle.sample_count"))
        cfg.oracle_sample_count = static_cast<int>(int_of(*v, "oracle.sample_count", 1, 1000000));
    if (const auto* v = get("oracle.seeds"))
        cfg.oracle_seeds = static_cast<int>(int_of(*v, "oracle.seeds", 1, 64));

    if (const auto* v = get("rank.sample_count"))
        cfg.rank_sample_count = static_cast<int>(int_of(*v, "rank.sample_count", 2, 1000000));
    if (const auto* v = get("rank.calibrate")) cfg.rank_calibrate = bool_of(*v, "rank.calibrate");
    if (const auto* v = get("rank.ablation")) cfg.rank_ablation = bool_of(*v, "rank.ablation");
    if (const auto* v = get("rank.seeds"))
        cfg.rank_seeds = static_cast<int>(int_of(*v, "rank.seeds", 1, 64));

    if (const auto* v = get("search.generations"))
        cfg.search_generations = static_cast<int>(int_of(*v, "search.generations", 0, 1000000));
    if (const auto* v = get("search.population"))
        cfg.search_population = static_cast<int>(int_of(*v, "search.population", 4, 1000000));
    if (const auto* v = get("search.acc_min"))
        cfg.search_acc_min = real_of(*v, "search.acc_min", -1.0, 1.0);
    if (const auto* v = get("search.flops_max")) cfg.search_flops_max = u64_of(*v, "search.flops_max");
    if (const auto* v = get("search.w_acc"))
        cfg.search_w_acc = real_of(*v, "search.w_acc", 0.0, 1e9, true);
    if (const auto* v = get("search.w_flops"))
        cfg.search_w_flops = real_of(*v, "search.w_flops", 0.0, 1e9, true);
    if (const auto* v = get("search.tournament"))
        cfg.search_tournament = static_cast<int>(int_of(*v, "search.tournament", 1, 1000000));
    if (const auto* v = get("search.crossover_rate"))
        cfg.search_crossover_rate = real_of(*v, "search.crossover_rate", 0.0, 1.0);
    if (const auto* v = get("search.mutation_rate"))
        cfg.search_mutation_rate = real_of(*v, "search.mutation_rate", 0.0, 1.0);
    if (const auto* v = get("search.picks"))
        cfg.search_picks = static_cast<int>(int_of(*v, "search.picks", 1, 1000000));
    if (const auto* v = get("search.eval_cap")) {
        cfg.search_eval_cap = u64_of(*v, "search.eval_cap");
        if (cfg.search_eval_cap < 1) bad("search.eval_cap", "must be at least 1");
    }
    if (const auto* v = get("search.random_baseline"))
        cfg.search_random_baseline = bool_of(*v, "search.random_baseline");

    if (const auto* v = get("seed")) cfg.seed = u64_of(*v, "seed");

    // cross-field rules
    if (cfg.search_population % 2 != 0) bad("search.population", "must be even");
    if (cfg.search_picks > cfg.search_population)
        bad("search.picks", "cannot exceed search.population");
    try {
        (void)spec_of(cfg); // single source of structural space rules
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("space keys do not form a valid search space: ") +
                          e.what());
    }
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["space.layers"] = cfg.space_layers;
    j["space.kernels"] = cfg.space_kernels;
    j["space.m"] = cfg.space_m;
    j["space.expansion"] = cfg.space_expansion;
    j["space.image_hw"] = cfg.space_image_hw;
    j["space.stem_channels"] = cfg.space_stem_channels;
    j["space.stem_kernel"] = cfg.space_stem_kernel;
    j["space.stem_stride"] = cfg.space_stem_stride;
    j["space.classes"] = cfg.space_classes;
    j["space.sbn_mode"] = cfg.space_sbn_mode;
    j["space.aggregation"] = cfg.space_aggregation;
    j["space.residual"] = cfg.space_residual;
    j["data.train_count"] = cfg.data_train_count;
    j["data.eval_count"] = cfg.data_eval_count;
    j["data.calib_count"] = cfg.data_calib_count;
    j["data.seed"] = cfg.data_seed;
    j["train.epochs"] = cfg.train_epochs;
    j["train.batch_size"] = cfg.train_batch_size;
    j["train.lr"] = cfg.train_lr;
    j["train.momentum"] = cfg.train_momentum;
    j["train.weight_decay"] = cfg.train_weight_decay;
    j["train.bernoulli_p"] = cfg.train_bernoulli_p;
    j["train.probe_every"] = cfg.train_probe_every;
    j["train.probe_models"] = cfg.train_probe_models;
    j["calib.batches"] = cfg.calib_batches;
    j["calib.batch_size"] = cfg.calib_batch_size;
    j["oracle.sample_count"] = cfg.oracle_sample_count;
    j["oracle.seeds"] = cfg.oracle_seeds;
    j["rank.sample_count"] = cfg.rank_sample_count;
    j["rank.calibrate"] = cfg.rank_calibrate;
    j["rank.ablation"] = cfg.rank_ablation;
    j["rank.seeds"] = cfg.rank_seeds;
    j["search.generations"] = cfg.search_generations;
    j["search.population"] = cfg.search_population;
    j["search.acc_min"] = cfg.search_acc_min;
    j["search.flops_max"] = cfg.search_flops_max;
    j["search.w_acc"] = cfg.search_w_acc;
    j["search.w_flops"] = cfg.search_w_flops;
    j["search.tournament"] = cfg.search_tournament;
    j["search.crossover_rate"] = cfg.search_crossover_rate;
    j["search.mutation_rate"] = cfg.search_mutation_rate;
    j["search.picks"] = cfg.search_picks;
    j["search.eval_cap"] = cfg.search_eval_cap;
    j["search.random_baseline"] = cfg.search_random_baseline;
    j["seed"] = cfg.seed;
    return j;
}

nlohmann::json read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("config file not found: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    return config_from_json(read_config_file(path));
}

void save_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_config: cannot open " + path);
    out << config_to_json(cfg).dump(2) << '\n';
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
        parsed = value; // unquoted strings like sbn modes
    }
    doc[key] = std::move(parsed);
}

std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a64(config_to_json(cfg).dump()));
}

std::string config_fingerprint(const RunConfig& cfg) {
    const nlohmann::json full = config_to_json(cfg);
    nlohmann::json subset;
    for (const auto& item : full.items()) {
        const std::string& key = item.key();
        if (key.rfind("space.", 0) == 0 || key.rfind("data.", 0) == 0)
            subset[key] = item.value();
    }
    return hex64(fnv1a64(subset.dump()));
}

SearchSpaceSpec spec_of(const RunConfig& cfg) {
    SearchSpaceSpec spec =
        make_space(cfg.space_layers, cfg.space_kernels, cfg.space_m, cfg.space_expansion);
    spec.image_hw = cfg.space_image_hw;
    spec.stem_channels = cfg.space_stem_channels;
    spec.stem_kernel = cfg.space_stem_kernel;
    spec.stem_stride = cfg.space_stem_stride;
    spec.num_classes = cfg.space_classes;
    spec.residual = cfg.space_residual;
    if (cfg.space_sbn_mode == "vanilla") spec.sbn_mode = SbnMode::Vanilla;
    else if (cfg.space_sbn_mode == "linear") spec.sbn_mode = SbnMode::Linear;
    else spec.sbn_mode = SbnMode::Exponential;
    spec.aggregation =
        cfg.space_aggregation == "sum" ? Aggregation::Sum : Aggregation::SumProj;
    validate(spec);
    return spec;
}

TrainHyper hyper_of(const RunConfig& cfg) {
    TrainHyper hyper;
    hyper.epochs = cfg.train_epochs;
    hyper.batch_size = cfg.train_batch_size;
    hyper.lr = cfg.train_lr;
    hyper.momentum = cfg.train_momentum;
    hyper.weight_decay = cfg.train_weight_decay;
    hyper.bernoulli_p = cfg.train_bernoulli_p;
    return hyper;
}

SearchConfig search_of(const RunConfig& cfg) {
    SearchConfig sc;
    sc.generations = cfg.search_generations;
    sc.population = cfg.search_population;
    sc.acc_min = cfg.search_acc_min;
    sc.flops_max = cfg.search_flops_max == 0 ? std::numeric_limits<std::uint64_t>::max()
                                             : cfg.search_flops_max;
    sc.w_acc = cfg.search_w_acc;
    sc.w_flops = cfg.search_w_flops;
    sc.tournament = cfg.search_tournament;
    sc.crossover_rate = cfg.search_crossover_rate;
    sc.mutation_rate = cfg.search_mutation_rate;
    sc.pareto_picks = cfg.search_picks;
    sc.eval_cap = cfg.search_eval_cap;
    return sc;
}

RunData datasets_of(const RunConfig& cfg) {
    const Rng root(cfg.data_seed);
    RunData d;
    d.train = gen_synthetic(root.split("train-set").next_u64(), cfg.data_train_count,
                            cfg.space_image_hw, cfg.space_classes);
    d.eval = gen_synthetic(root.split("eval-set").next_u64(), cfg.data_eval_count,
                           cfg.space_image_hw, cfg.space_classes);
    d.calib = gen_synthetic(root.split("calib-set").next_u64(), cfg.data_calib_count,
                            cfg.space_image_hw, cfg.space_classes);
    return d;
}

std::string run_root(const std::string& out_flag) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("MIXPATH_RUNS_DIR"); env != nullptr && *env != '\0')
        return env;
    return "runs";
}

std::string run_dir(const RunConfig& cfg, const std::string& out_flag) {
    return run_root(out_flag) + "/" + config_hash(cfg);
}

} // namespace mixpath
