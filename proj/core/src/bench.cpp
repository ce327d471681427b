#include "mixpath/bench.hpp"

#include "mixpath/hash.hpp"
#include "mixpath/optim.hpp"
#include "mixpath/parallel.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace mixpath {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_line_or_throw(std::ifstream& in, const std::string& path, int lineno) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(path + ": unexpected end of file at line " +
                                 std::to_string(lineno));
    return line;
}

json parse_line(const std::string& line, const std::string& path, int lineno) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad JSON: " + e.what());
    }
}

// mask for "all paths of every layer active", the fixed topology of a
// restricted spec
ArchMask full_mask(const SearchSpaceSpec& spec) {
    ArchMask mask;
    mask.layers.reserve(spec.layers.size());
    for (const auto& layer : spec.layers)
        mask.layers.push_back((1u << layer.n()) - 1u);
    return mask;
}

} // namespace

std::string describe_space(const SearchSpaceSpec& spec) {
    std::string s = "classes=" + std::to_string(spec.num_classes) +
                    ";in=" + std::to_string(spec.in_channels) +
                    ";hw=" + std::to_string(spec.image_hw) +
                    ";stem=" + std::to_string(spec.stem_channels) +
                    ";stem_k=" + std::to_string(spec.stem_kernel) +
                    ";stride=" + std::to_string(spec.stem_stride) +
                    ";m=" + std::to_string(spec.m) + ";agg=" + to_string(spec.aggregation) +
                    ";bank=" + to_string(spec.sbn_mode) +
                    ";residual=" + (spec.residual ? "1" : "0") + ";layers=";
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (l) s += '|';
        for (std::size_t i = 0; i < spec.layers[l].paths.size(); ++i) {
            const PathSpec& p = spec.layers[l].paths[i];
            if (i) s += ',';
            s += std::string(to_string(p.kind)) + std::to_string(p.kernel) + "x" +
                 fmt_double(p.expansion);
        }
    }
    return s;
}

std::string describe_hyper(const TrainHyper& hyper) {
    return "epochs=" + std::to_string(hyper.epochs) +
           ";batch=" + std::to_string(hyper.batch_size) + ";lr=" + fmt_double(hyper.lr) +
           ";momentum=" + fmt_double(hyper.momentum) +
           ";wd=" + fmt_double(hyper.weight_decay) +
           ";p=" + fmt_double(hyper.bernoulli_p);
}

std::string bench_fingerprint(const SearchSpaceSpec& spec, const TrainHyper& hyper) {
    return hex64(fnv1a64(describe_space(spec) + "#" + describe_hyper(hyper)));
}

SearchSpaceSpec restrict_to_mask(const SearchSpaceSpec& spec, const ArchMask& mask) {
    if (!mask_valid(spec, mask))
        throw std::invalid_argument("restrict_to_mask: mask does not fit the space");
    SearchSpaceSpec sub = spec;
    sub.sbn_mode = SbnMode::Vanilla;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        sub.layers[l].paths.clear();
        for (int i = 0; i < spec.layers[l].n(); ++i)
            if (mask.layers[l] & (1u << i)) sub.layers[l].paths.push_back(spec.layers[l].paths[i]);
    }
    return sub;
}

double train_standalone(const SearchSpaceSpec& spec, const ArchMask& mask,
                        const Dataset& train, const Dataset& eval,
                        const TrainHyper& hyper, std::uint64_t seed) {
    const SearchSpaceSpec sub = restrict_to_mask(spec, mask);
    const Rng root = Rng(seed).split(mask_to_string(mask));
    Supernet net = build_supernet(sub, root);
    const ArchMask fixed = full_mask(sub);

    if (train.size() == 0) throw std::invalid_argument("train_standalone: empty training set");
    if (hyper.batch_size < 2)
        throw std::invalid_argument("train_standalone: batch size must be >= 2");
    const std::size_t batches_per_epoch = train.size() / hyper.batch_size;
    if (hyper.epochs > 0 && batches_per_epoch == 0)
        throw std::invalid_argument("train_standalone: training set smaller than one batch");

    const int total_steps = hyper.epochs * static_cast<int>(batches_per_epoch);
    int step = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        Rng shuffle_rng = root.split("shuffle", static_cast<std::uint64_t>(epoch));
        for (const auto& idx : shuffled_batches(train.size(), hyper.batch_size, shuffle_rng)) {
            const double lr = cosine_lr(hyper.lr, step, total_steps);
            const Batch batch = make_batch(train, idx);
            try {
                (void)train_step(net, fixed, batch, hyper, lr);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " training " +
                                   mask_to_string(mask) + " seed " + std::to_string(seed) +
                                   " at step " + std::to_string(step));
            }
            ++step;
        }
    }
    return evaluate_oneshot(net, fixed, eval, false);
}

BenchTable build_bench(const SearchSpaceSpec& spec, const std::vector<ArchMask>& masks,
                       const std::vector<std::uint64_t>& seeds, const Dataset& train,
                       const Dataset& eval, const TrainHyper& hyper, int workers) {
    if (masks.empty()) throw std::invalid_argument("build_bench: no masks");
    if (seeds.empty()) throw std::invalid_argument("build_bench: no seeds");
    {
        std::set<std::string> unique;
        for (const auto& mask : masks) {
            if (!mask_valid(spec, mask))
                throw std::invalid_argument("build_bench: invalid mask " +
                                            mask_to_string(mask));
            if (!unique.insert(mask_to_string(mask)).second)
                throw std::invalid_argument("build_bench: duplicate mask " +
                                            mask_to_string(mask));
        }
    }

    struct JobOut {
        double acc = 0.0;
        bool ok = false;
    };
    const std::size_t per_mask = seeds.size();
    const auto results = parallel_map<JobOut>(
        masks.size() * per_mask, workers, [&](std::size_t i) -> JobOut {
            const ArchMask& mask = masks[i / per_mask];
            const std::uint64_t seed = seeds[i % per_mask];
            try {
                return {train_standalone(spec, mask, train, eval, hyper, seed), true};
            } catch (const NumericError&) {
                return {}; // blowups become flagged rows, not lost tables
            }
        });

    BenchTable table;
    table.fingerprint = bench_fingerprint(spec, hyper);
    std::size_t finished = 0;
    for (std::size_t mi = 0; mi < masks.size(); ++mi) {
        BenchRecord rec;
        rec.mask = masks[mi];
        for (std::size_t si = 0; si < per_mask; ++si) {
            const JobOut& out = results[mi * per_mask + si];
            if (out.ok) {
                rec.seed_accuracies.push_back(out.acc);
                ++finished;
            } else {
                rec.failed = true;
            }
        }
        double sum = 0.0;
        for (double a : rec.seed_accuracies) sum += a;
        rec.accuracy = rec.seed_accuracies.empty()
                           ? 0.0
                           : sum / static_cast<double>(rec.seed_accuracies.size());
        const CostBreakdown cost = arch_cost(spec, rec.mask);
        rec.flops = cost.flops;
        rec.params = cost.params;
        table.rows.push_back(std::move(rec));
    }
    table.completeness =
        static_cast<double>(finished) / static_cast<double>(masks.size() * per_mask);
    return table;
}

void save_bench(const BenchTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_bench: cannot open " + path);
    json header;
    header["fingerprint"] = table.fingerprint;
    header["completeness"] = table.completeness;
    header["rows"] = table.rows.size();
    out << header.dump() << '\n';
    for (const BenchRecord& rec : table.rows) {
        json j;
        j["mask"] = rec.mask.layers;
        j["acc"] = rec.accuracy;
        j["seed_accs"] = rec.seed_accuracies;
        j["flops"] = rec.flops;
        j["params"] = rec.params;
        if (rec.failed) j["failed"] = true;
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("save_bench: write failed for " + path);
}

BenchTable load_bench(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_bench: cannot open " + path);

    const json header = parse_line(read_line_or_throw(in, path, 1), path, 1);
    if (!header.contains("fingerprint") || !header["fingerprint"].is_string() ||
        !header.contains("rows") || !header["rows"].is_number_unsigned() ||
        !header.contains("completeness") || !header["completeness"].is_number())
        throw std::runtime_error("load_bench: malformed header in " + path);

    BenchTable table;
    table.fingerprint = header["fingerprint"].get<std::string>();
    table.completeness = header["completeness"].get<double>();
    const std::size_t rows = header["rows"].get<std::size_t>();

    std::set<std::string> unique;
    for (std::size_t r = 0; r < rows; ++r) {
        const int lineno = static_cast<int>(r) + 2;
        const json j = parse_line(read_line_or_throw(in, path, lineno), path, lineno);
        BenchRecord rec;
        if (!j.contains("mask") || !j["mask"].is_array() || j["mask"].empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad mask");
        rec.mask.layers = j["mask"].get<std::vector<std::uint32_t>>();
        if (!unique.insert(mask_to_string(rec.mask)).second)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": duplicate mask " + mask_to_string(rec.mask));
        rec.accuracy = j.at("acc").get<double>();
        rec.seed_accuracies = j.at("seed_accs").get<std::vector<double>>();
        rec.flops = j.at("flops").get<std::uint64_t>();
        rec.params = j.at("params").get<std::uint64_t>();
        rec.failed = j.value("failed", false);
        if (rec.accuracy < 0.0 || rec.accuracy > 1.0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": accuracy outside [0,1]");
        table.rows.push_back(std::move(rec));
    }
    std::string extra;
    if (std::getline(in, extra) && !extra.empty())
        throw std::runtime_error(path + ": trailing content after " +
                                 std::to_string(rows) + " rows");
    return table;
}

void verify_bench(const BenchTable& table, const SearchSpaceSpec& spec) {
    std::set<std::string> unique;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const BenchRecord& rec = table.rows[r];
        const std::string name = mask_to_string(rec.mask);
        const std::string where = "bench row " + std::to_string(r) + " (" + name + ")";
        if (!mask_valid(spec, rec.mask))
            throw std::runtime_error(where + ": mask does not fit the space");
        if (!unique.insert(name).second) throw std::runtime_error(where + ": duplicate mask");
        const CostBreakdown cost = arch_cost(spec, rec.mask);
        if (rec.flops != cost.flops)
            throw std::runtime_error(where + ": stored flops " + std::to_string(rec.flops) +
                                     " != recomputed " + std::to_string(cost.flops));
        if (rec.params != cost.params)
            throw std::runtime_error(where + ": stored params " +
                                     std::to_string(rec.params) + " != recomputed " +
                                     std::to_string(cost.params));
        double sum = 0.0;
        for (double a : rec.seed_accuracies) sum += a;
        const double mean = rec.seed_accuracies.empty()
                                ? 0.0
                                : sum / static_cast<double>(rec.seed_accuracies.size());
        if (rec.accuracy != mean)
            throw std::runtime_error(where + ": accuracy is not the mean of its seeds");
        if (!rec.failed && rec.seed_accuracies.empty())
            throw std::runtime_error(where + ": unfailed row without seed accuracies");
    }
}

} // namespace mixpath
