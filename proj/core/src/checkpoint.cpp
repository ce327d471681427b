#include "mixpath/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mixpath {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}
void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}
std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_entry(std::ostream& os, const std::string& name,
                 const std::vector<std::uint32_t>& dims, const float* data,
                 std::size_t count) {
    if (name.size() > 0xFFFF) throw std::invalid_argument("entry name too long");
    put_u16(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(dims.size()));
    std::size_t expect = 1;
    for (std::uint32_t d : dims) {
        put_u32(os, d);
        expect *= d;
    }
    if (expect != count) throw std::invalid_argument("entry dims mismatch for " + name);
    for (std::size_t i = 0; i < count; ++i) put_f32(os, data[i]);
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
    std::vector<std::uint32_t> dims(t.shape.begin(), t.shape.end());
    write_entry(os, name, dims, t.data.data(), t.data.size());
}

void write_bn(std::ostream& os, const std::string& name, const BnState& bn) {
    const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(bn.channels())};
    write_entry(os, name + ".gamma", dims, bn.gamma.data(), bn.gamma.size());
    write_entry(os, name + ".beta", dims, bn.beta.data(), bn.beta.size());
    std::vector<float> tmp(bn.running_mean.begin(), bn.running_mean.end());
    write_entry(os, name + ".mean", dims, tmp.data(), tmp.size());
    tmp.assign(bn.running_var.begin(), bn.running_var.end());
    write_entry(os, name + ".var", dims, tmp.data(), tmp.size());
}

std::size_t entry_count(const Supernet& net) {
    std::size_t n = 1 + 4; // stem conv + stem bn
    for (const auto& blk : net.blocks) {
        n += 1 + 4;                       // expand + its bn
        n += blk.paths.size() * (1 + 4);  // paths + their bns
        if (net.spec.aggregation == Aggregation::SumProj) n += 1;
        n += blk.sbn.size() * 4;
    }
    n += 2; // head w, b
    n += 3; // meta entries
    return n;
}

} // namespace

void save_checkpoint(const Supernet& net, const std::string& path,
                     const CheckpointMeta& meta) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write("MXPT", 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(entry_count(net)));

    write_tensor(os, stem_conv_name(), net.stem.w);
    write_bn(os, stem_bn_name(), net.stem_bn.bn);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const auto& blk = net.blocks[b];
        const int bi = static_cast<int>(b);
        write_tensor(os, expand_name(bi), blk.expand.w);
        write_bn(os, expand_bn_name(bi), blk.expand_bn.bn);
        for (std::size_t i = 0; i < blk.paths.size(); ++i) {
            write_tensor(os, path_name(bi, static_cast<int>(i)), blk.paths[i].w);
            write_bn(os, path_bn_name(bi, static_cast<int>(i)), blk.path_bn[i].bn);
        }
        if (net.spec.aggregation == Aggregation::SumProj)
            write_tensor(os, proj_name(bi), blk.proj.w);
        for (const auto& [key, state] : blk.sbn) write_bn(os, sbn_name(bi, key), state.bn);
    }
    write_tensor(os, "head.w", net.head_w.w);
    write_tensor(os, "head.b", net.head_b.w);

    const float zero = 0.0f;
    write_entry(os, "meta.fingerprint." + meta.fingerprint, {1}, &zero, 1);
    write_entry(os, "meta.config." + meta.config_hash, {1}, &zero, 1);
    write_entry(os, "meta.seed." + std::to_string(meta.seed), {1}, &zero, 1);
    if (!os) throw std::runtime_error("short write on checkpoint: " + path);
}

CheckpointMap read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MXPT", 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (get_u32(is) != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    const std::uint32_t count = get_u32(is);

    CheckpointMap out;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint16_t name_len = get_u16(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const int rank = is.get();
        if (!is || rank < 0 || rank > 8)
            throw std::runtime_error("corrupt checkpoint entry in " + path);
        CheckpointEntry entry;
        std::size_t numel = 1;
        for (int d = 0; d < rank; ++d) {
            entry.dims.push_back(get_u32(is));
            numel *= entry.dims.back();
        }
        entry.values.resize(numel);
        for (std::size_t i = 0; i < numel; ++i) entry.values[i] = get_f32(is);
        if (!is) throw std::runtime_error("truncated checkpoint: " + path);
        if (!out.emplace(std::move(name), std::move(entry)).second)
            throw std::runtime_error("duplicate checkpoint entry in " + path);
    }
    return out;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
    const auto entries = read_checkpoint(path);
    CheckpointMeta meta;
    for (const auto& [name, entry] : entries) {
        if (name.starts_with("meta.fingerprint."))
            meta.fingerprint = name.substr(std::strlen("meta.fingerprint."));
        else if (name.starts_with("meta.config."))
            meta.config_hash = name.substr(std::strlen("meta.config."));
        else if (name.starts_with("meta.seed."))
            meta.seed = std::stoull(name.substr(std::strlen("meta.seed.")));
    }
    return meta;
}

namespace {

void load_tensor(CheckpointMap& entries, const std::string& name, Tensor& dst) {
    auto it = entries.find(name);
    if (it == entries.end())
        throw std::runtime_error("checkpoint is missing entry " + name);
    const auto& entry = it->second;
    if (entry.dims.size() != dst.shape.size() ||
        !std::equal(entry.dims.begin(), entry.dims.end(), dst.shape.begin(),
                    [](std::uint32_t a, int b) { return a == static_cast<std::uint32_t>(b); }))
        throw std::runtime_error("checkpoint entry " + name + " has the wrong shape");
    dst.data = entry.values;
    entries.erase(it);
}

void load_bn(CheckpointMap& entries, const std::string& name, BnState& bn) {
    auto pull = [&](const std::string& field) -> std::vector<float> {
        auto it = entries.find(name + field);
        if (it == entries.end())
            throw std::runtime_error("checkpoint is missing entry " + name + field);
        if (it->second.values.size() != static_cast<std::size_t>(bn.channels()))
            throw std::runtime_error("checkpoint entry " + name + field +
                                     " has the wrong length");
        auto v = std::move(it->second.values);
        entries.erase(it);
        return v;
    };
    bn.gamma = pull(".gamma");
    bn.beta = pull(".beta");
    const auto mean = pull(".mean");
    const auto var = pull(".var");
    bn.running_mean.assign(mean.begin(), mean.end());
    bn.running_var.assign(var.begin(), var.end());
}

} // namespace

void load_checkpoint(Supernet& net, const std::string& path, CheckpointMeta* meta) {
    auto entries = read_checkpoint(path);
    if (meta) {
        CheckpointMeta m;
        for (const auto& [name, entry] : entries) {
            if (name.starts_with("meta.fingerprint."))
                m.fingerprint = name.substr(std::strlen("meta.fingerprint."));
            else if (name.starts_with("meta.config."))
                m.config_hash = name.substr(std::strlen("meta.config."));
            else if (name.starts_with("meta.seed."))
                m.seed = std::stoull(name.substr(std::strlen("meta.seed.")));
        }
        *meta = m;
    }
    std::erase_if(entries, [](const auto& kv) { return kv.first.starts_with("meta."); });

    load_tensor(entries, stem_conv_name(), net.stem.w);
    load_bn(entries, stem_bn_name(), net.stem_bn.bn);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        auto& blk = net.blocks[b];
        const int bi = static_cast<int>(b);
        load_tensor(entries, expand_name(bi), blk.expand.w);
        load_bn(entries, expand_bn_name(bi), blk.expand_bn.bn);
        for (std::size_t i = 0; i < blk.paths.size(); ++i) {
            load_tensor(entries, path_name(bi, static_cast<int>(i)), blk.paths[i].w);
            load_bn(entries, path_bn_name(bi, static_cast<int>(i)), blk.path_bn[i].bn);
        }
        if (net.spec.aggregation == Aggregation::SumProj)
            load_tensor(entries, proj_name(bi), blk.proj.w);
        for (auto& [key, state] : blk.sbn) load_bn(entries, sbn_name(bi, key), state.bn);
    }
    load_tensor(entries, "head.w", net.head_w.w);
    load_tensor(entries, "head.b", net.head_b.w);
    if (!entries.empty())
        throw std::runtime_error("checkpoint has entries the net cannot place, first: " +
                                 entries.begin()->first);
}

} // namespace mixpath
