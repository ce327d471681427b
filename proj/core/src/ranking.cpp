#include "mixpath/ranking.hpp"

#include "mixpath/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mixpath {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, const char* who) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
    return out;
}

// pairs tied within consecutive equal groups: sum of t*(t-1)/2
template <typename It, typename Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
    std::int64_t total = 0;
    while (first != last) {
        It next = first;
        std::int64_t run = 0;
        while (next != last && eq(*first, *next)) {
            ++next;
            ++run;
        }
        total += run * (run - 1) / 2;
        first = next;
    }
    return total;
}

// strict inversions in `values`, counted by merge sort
std::int64_t count_exchanges(std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> buffer(n);
    std::int64_t exchanges = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t low = 0; low + width < n; low += 2 * width) {
            const std::size_t mid = low + width;
            const std::size_t high = std::min(low + 2 * width, n);
            std::size_t i = low, j = mid, k = low;
            while (i < mid && j < high) {
                if (values[j] < values[i]) {
                    exchanges += static_cast<std::int64_t>(mid - i);
                    buffer[k++] = values[j++];
                } else {
                    buffer[k++] = values[i++];
                }
            }
            while (i < mid) buffer[k++] = values[i++];
            while (j < high) buffer[k++] = values[j++];
            std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(low),
                      buffer.begin() + static_cast<std::ptrdiff_t>(high),
                      values.begin() + static_cast<std::ptrdiff_t>(low));
        }
    }
    return exchanges;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("kendall_tau: need at least two pairs");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a[x] != a[y]) return a[x] < a[y];
        return b[x] < b[y];
    });

    std::vector<std::pair<double, double>> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = {a[order[i]], b[order[i]]};

    const std::int64_t n0 = static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) - 1) / 2;
    const std::int64_t n1 = tied_pairs(sorted.begin(), sorted.end(),
                                       [](const auto& p, const auto& q) { return p.first == q.first; });
    const std::int64_t n3 = tied_pairs(sorted.begin(), sorted.end(),
                                       [](const auto& p, const auto& q) { return p == q; });

    std::vector<double> bs(n);
    for (std::size_t i = 0; i < n; ++i) bs[i] = sorted[i].second;
    const std::int64_t exchanges = count_exchanges(bs); // bs ends up sorted
    const std::int64_t n2 =
        tied_pairs(bs.begin(), bs.end(), [](double p, double q) { return p == q; });

    if (n0 == n1 || n0 == n2)
        throw NumericError("kendall_tau: undefined when a whole list is tied");

    const std::int64_t con_minus_dis = n0 - n1 - n2 + n3 - 2 * exchanges;
    return static_cast<double>(con_minus_dis) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

RankingReport ranking_experiment(const Supernet& net, const BenchTable& oracle,
                                 const Dataset& eval_set, const Dataset& calib_set,
                                 const RankingConfig& cfg) {
    if (cfg.sample_count < 2)
        throw std::invalid_argument("ranking_experiment: need at least two samples");
    if (static_cast<std::size_t>(cfg.sample_count) > oracle.rows.size())
        throw std::invalid_argument("ranking_experiment: sample_count " +
                                    std::to_string(cfg.sample_count) + " exceeds oracle size " +
                                    std::to_string(oracle.rows.size()));
    if (eval_set.size() == 0)
        throw std::invalid_argument("ranking_experiment: empty eval set");

    // sample without replacement, seeded
    Rng rng = Rng(cfg.seed).split("rank-sample");
    std::vector<std::size_t> idx(oracle.rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < cfg.sample_count; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.uniform_int(static_cast<std::uint64_t>(idx.size() - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(cfg.sample_count));

    const std::vector<double> accs = parallel_map<double>(
        idx.size(), cfg.workers, [&](std::size_t i) {
            return evaluate_oneshot(net, oracle.rows[idx[i]].mask, eval_set, cfg.calibrate,
                                    &calib_set, cfg.calib_batches, cfg.batch_size);
        });

    RankingReport report;
    report.sbn_mode = to_string(net.spec.sbn_mode);
    report.calibrated = cfg.calibrate;
    report.seed = cfg.seed;
    std::vector<double> oneshot(idx.size()), truth(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const BenchRecord& row = oracle.rows[idx[i]];
        report.entries.push_back({row.mask, accs[i], row.accuracy});
        oneshot[i] = accs[i];
        truth[i] = row.accuracy;
    }
    report.tau = kendall_tau(oneshot, truth);
    return report;
}

void save_ranking_csv(const RankingReport& report, const std::string& path) {
    auto out = open_out(path, "save_ranking_csv");
    out << "mask,oneshot,truth\n";
    for (const RankingEntry& e : report.entries)
        out << mask_to_string(e.mask) << ',' << fmt(e.oneshot) << ',' << fmt(e.truth) << '\n';
}

void save_ranking_json(const RankingReport& report, const std::string& path) {
    nlohmann::json j;
    j["tau"] = report.tau;
    j["sbn_mode"] = report.sbn_mode;
    j["calibrated"] = report.calibrated;
    j["seed"] = report.seed;
    j["samples"] = report.entries.size();
    auto out = open_out(path, "save_ranking_json");
    out << j.dump(2) << '\n';
}

std::vector<ProbePoint> stability_probe(const SearchSpaceSpec& spec, const Dataset& train,
                                        const Dataset& eval, const TrainHyper& hyper,
                                        int probe_every, int probe_models, const Rng& rng) {
    if (probe_every < 1) throw std::invalid_argument("stability_probe: probe_every must be >= 1");
    if (probe_models < 2)
        throw std::invalid_argument("stability_probe: need at least two probe models");
    Supernet net = build_supernet(spec, rng);
    ProbeConfig probe;
    probe.every = probe_every;
    probe.models = probe_models;
    probe.eval_set = &eval;
    return train_supernet(net, train, hyper, rng, &probe).probes;
}

void save_probe_csv(const std::vector<ProbePoint>& series, const std::string& path) {
    auto out = open_out(path, "save_probe_csv");
    out << "epoch,mean_acc,var_acc\n";
    for (const ProbePoint& p : series)
        out << p.epoch << ',' << fmt(p.mean_acc) << ',' << fmt(p.var_acc) << '\n';
}

SbnStatsDump sbn_stats(const Supernet& net, double eps) {
    if (net.spec.sbn_mode == SbnMode::Vanilla)
        throw std::invalid_argument("sbn_stats: the vanilla bank has one state, no ratios");

    SbnStatsDump dump;
    dump.eps = eps;
    for (int b = 0; b < static_cast<int>(net.blocks.size()); ++b) {
        const Block& blk = net.blocks[b];
        SbnStatsDump::BlockDump bd;
        bd.block = b;

        const int channels = blk.sbn.begin()->second.bn.channels();
        const int cap = std::min(net.spec.m, net.spec.layers[b].n());

        // per-cardinality averages (a linear bank has exactly one key per
        // cardinality, so averaging is the identity there)
        std::vector<std::vector<double>> mean_k(cap + 1, std::vector<double>(channels, 0.0));
        std::vector<std::vector<double>> var_k(cap + 1, std::vector<double>(channels, 0.0));
        std::vector<std::vector<double>> gamma_k(cap + 1, std::vector<double>(channels, 0.0));
        std::vector<std::vector<double>> beta_k(cap + 1, std::vector<double>(channels, 0.0));
        std::vector<int> count_k(cap + 1, 0);

        for (const auto& [key, state] : blk.sbn) {
            SbnKeyStats stats;
            stats.key = key;
            stats.mean = state.bn.running_mean;
            stats.var = state.bn.running_var;
            stats.gamma = state.bn.gamma;
            stats.beta = state.bn.beta;
            bd.keys.push_back(std::move(stats));

            const int card = net.spec.sbn_mode == SbnMode::Linear
                                 ? static_cast<int>(key)
                                 : std::popcount(key);
            count_k[card] += 1;
            for (int c = 0; c < channels; ++c) {
                mean_k[card][c] += state.bn.running_mean[c];
                var_k[card][c] += state.bn.running_var[c];
                gamma_k[card][c] += state.bn.gamma[c];
                beta_k[card][c] += state.bn.beta[c];
            }
        }
        for (int k = 1; k <= cap; ++k) {
            if (count_k[k] == 0) continue;
            for (int c = 0; c < channels; ++c) {
                mean_k[k][c] /= count_k[k];
                var_k[k][c] /= count_k[k];
                gamma_k[k][c] /= count_k[k];
                beta_k[k][c] /= count_k[k];
            }
        }

        for (int k = 2; k <= cap; ++k) {
            if (count_k[1] == 0 || count_k[k] == 0) continue;
            SbnRatio ratio;
            ratio.k = k;
            for (int c = 0; c < channels; ++c) {
                if (std::abs(mean_k[k][c]) > eps)
                    ratio.mean_ratio.push_back(mean_k[1][c] / mean_k[k][c]);
                if (std::abs(var_k[k][c]) > eps)
                    ratio.var_ratio.push_back(var_k[1][c] / var_k[k][c]);
                if (std::abs(gamma_k[k][c]) > eps)
                    ratio.gamma_ratio.push_back(gamma_k[1][c] / gamma_k[k][c]);
                if (std::abs(beta_k[k][c]) > eps)
                    ratio.beta_ratio.push_back(beta_k[1][c] / beta_k[k][c]);
            }
            if (!ratio.mean_ratio.empty()) ratio.median_mean_ratio = median_of(ratio.mean_ratio);
            if (!ratio.var_ratio.empty()) ratio.median_var_ratio = median_of(ratio.var_ratio);
            bd.ratios.push_back(std::move(ratio));
        }
        dump.blocks.push_back(std::move(bd));
    }
    return dump;
}

void save_sbn_stats_csv(const SbnStatsDump& dump, const std::string& path) {
    auto out = open_out(path, "save_sbn_stats_csv");
    out << "block,key,channel,mean,var,gamma,beta\n";
    for (const auto& bd : dump.blocks)
        for (const auto& key : bd.keys)
            for (std::size_t c = 0; c < key.mean.size(); ++c)
                out << bd.block << ',' << key.key << ',' << c << ',' << fmt(key.mean[c])
                    << ',' << fmt(key.var[c]) << ',' << fmt(key.gamma[c]) << ','
                    << fmt(key.beta[c]) << '\n';
}

void save_sbn_ratios_csv(const SbnStatsDump& dump, const std::string& path) {
    auto out = open_out(path, "save_sbn_ratios_csv");
    out << "block,k,param,ratio\n";
    for (const auto& bd : dump.blocks)
        for (const auto& ratio : bd.ratios) {
            for (double v : ratio.mean_ratio)
                out << bd.block << ',' << ratio.k << ",mean," << fmt(v) << '\n';
            for (double v : ratio.var_ratio)
                out << bd.block << ',' << ratio.k << ",var," << fmt(v) << '\n';
            for (double v : ratio.gamma_ratio)
                out << bd.block << ',' << ratio.k << ",gamma," << fmt(v) << '\n';
            for (double v : ratio.beta_ratio)
                out << bd.block << ',' << ratio.k << ",beta," << fmt(v) << '\n';
        }
}

SimilarityMatrix feature_similarity(const Supernet& net, int block,
                                    const Tensor& probe_batch) {
    if (block < 0 || block >= static_cast<int>(net.blocks.size()))
        throw std::invalid_argument("feature_similarity: block out of range");

    SimilarityMatrix sim;
    sim.block = block;
    const int n = net.spec.layers[block].n();
    const int cap = std::min(net.spec.m, n);
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits)
        if (std::popcount(bits) <= cap) sim.selections.push_back(bits);

    // upstream layers pinned to their first path so every selection sees the
    // same block input
    ArchMask mask;
    mask.layers.assign(net.blocks.size(), 1u);

    std::vector<std::vector<double>> features;
    for (std::uint32_t bits : sim.selections) {
        mask.layers[static_cast<std::size_t>(block)] = bits;
        Tensor pre, post;
        EvalOptions opt;
        opt.capture_block = block;
        opt.captured_pre = &pre;
        opt.captured_post = &post;
        (void)forward_submodel(net, mask, probe_batch, &opt);

        std::vector<double> vec(pre.data.begin(), pre.data.end());
        double pre_sq = 0.0;
        for (double v : vec) pre_sq += v * v;
        double post_sq = 0.0;
        for (float v : post.data) post_sq += static_cast<double>(v) * v;

        sim.pre_magnitude.push_back(std::sqrt(pre_sq));
        sim.post_magnitude.push_back(std::sqrt(post_sq));
        sim.degenerate.push_back(std::sqrt(pre_sq) <= 1e-12);
        features.push_back(std::move(vec));
    }

    const std::size_t count = features.size();
    sim.cosine.assign(count, std::vector<double>(count, 0.0));
    for (std::size_t i = 0; i < count; ++i) {
        if (sim.degenerate[i]) continue;
        sim.cosine[i][i] = 1.0;
        for (std::size_t j = i + 1; j < count; ++j) {
            if (sim.degenerate[j]) continue;
            double dot = 0.0;
            for (std::size_t t = 0; t < features[i].size(); ++t)
                dot += features[i][t] * features[j][t];
            const double value = dot / (sim.pre_magnitude[i] * sim.pre_magnitude[j]);
            sim.cosine[i][j] = value;
            sim.cosine[j][i] = value;
        }
    }
    return sim;
}

void save_similarity_csv(const SimilarityMatrix& sim, const std::string& path) {
    auto out = open_out(path, "save_similarity_csv");
    out << "block,sel_a,sel_b,cosine,pre_a,post_a,degenerate_a\n";
    for (std::size_t i = 0; i < sim.selections.size(); ++i)
        for (std::size_t j = 0; j < sim.selections.size(); ++j)
            out << sim.block << ',' << sim.selections[i] << ',' << sim.selections[j] << ','
                << fmt(sim.cosine[i][j]) << ',' << fmt(sim.pre_magnitude[i]) << ','
                << fmt(sim.post_magnitude[i]) << ',' << (sim.degenerate[i] ? 1 : 0) << '\n';
}

} // namespace mixpath
