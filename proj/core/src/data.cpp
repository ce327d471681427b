#include "mixpath/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace mixpath {

Dataset gen_synthetic(std::uint64_t seed, int count, int hw, int num_classes) {
    if (count < 1 || hw < 4 || num_classes < 2)
        throw std::invalid_argument("gen_synthetic: bad count/size/class arguments");
    Dataset ds;
    ds.image_hw = hw;
    ds.channels = 1;
    ds.num_classes = num_classes;
    ds.labels.resize(count);
    ds.pixels.resize(static_cast<std::size_t>(count) * hw * hw);

    Rng rng = Rng(seed).split("synthetic");
    // Classes sit on a geometric frequency ladder below Nyquist, so more
    // classes means finer spacing. Orientation, phase, position, contrast
    // and a heavy noise floor vary per image: the label is only readable
    // through genuine spectral resolution, not through any single pixel.
    const double f_lo = 0.45 * std::numbers::pi;
    const double f_hi = 0.92 * std::numbers::pi;
    const double step =
        num_classes > 1 ? std::pow(f_hi / f_lo, 1.0 / (num_classes - 1)) : 1.0;
    for (int i = 0; i < count; ++i) {
        const int cls = static_cast<int>(rng.uniform_int(num_classes));
        ds.labels[i] = static_cast<std::uint8_t>(cls);

        const double freq = f_lo * std::pow(step, cls);
        const double theta = rng.uniform() * std::numbers::pi;
        const double phase = rng.uniform() * 2.0 * std::numbers::pi;
        const double cx = (0.25 + 0.5 * rng.uniform()) * hw;
        const double cy = (0.25 + 0.5 * rng.uniform()) * hw;
        const double sigma = hw * (0.24 + 0.12 * rng.uniform());
        const double amp = 0.55 + 0.45 * rng.uniform();
        const double ct = std::cos(theta), st = std::sin(theta);

        std::uint8_t* img = ds.pixels.data() + static_cast<std::size_t>(i) * hw * hw;
        for (int y = 0; y < hw; ++y)
            for (int x = 0; x < hw; ++x) {
                const double dx = x - cx, dy = y - cy;
                const double envelope =
                    std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                const double grating = std::sin(freq * (x * ct + y * st) + phase);
                const double noise = (rng.uniform() - 0.5) * 0.9;
                const double v = 0.5 + 0.5 * (amp * envelope * grating + noise);
                const int q = static_cast<int>(std::lround(v * 255.0));
                img[y * hw + x] = static_cast<std::uint8_t>(std::clamp(q, 0, 255));
            }
    }
    return ds;
}

namespace {
void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
} // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write dataset file: " + path);
    os.write("MXDS", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(ds.size()));
    put_u16(os, static_cast<std::uint16_t>(ds.image_hw));
    os.put(static_cast<char>(ds.channels));
    os.put(static_cast<char>(ds.num_classes));
    os.write(reinterpret_cast<const char*>(ds.labels.data()),
             static_cast<std::streamsize>(ds.labels.size()));
    os.write(reinterpret_cast<const char*>(ds.pixels.data()),
             static_cast<std::streamsize>(ds.pixels.size()));
    if (!os) throw std::runtime_error("short write on dataset file: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open dataset file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MXDS", 4) != 0)
        throw std::runtime_error("not a dataset file: " + path);
    const std::uint32_t version = get_u32(is);
    if (version != 1)
        throw std::runtime_error("unsupported dataset version in " + path);
    Dataset ds;
    const std::uint32_t count = get_u32(is);
    ds.image_hw = get_u16(is);
    ds.channels = is.get();
    ds.num_classes = is.get();
    if (!is || ds.channels < 1 || ds.num_classes < 2 || ds.image_hw < 1)
        throw std::runtime_error("corrupt dataset header in " + path);
    ds.labels.resize(count);
    ds.pixels.resize(static_cast<std::size_t>(count) * ds.image_bytes());
    is.read(reinterpret_cast<char*>(ds.labels.data()),
            static_cast<std::streamsize>(ds.labels.size()));
    is.read(reinterpret_cast<char*>(ds.pixels.data()),
            static_cast<std::streamsize>(ds.pixels.size()));
    if (!is) throw std::runtime_error("truncated dataset file: " + path);
    for (auto l : ds.labels)
        if (l >= ds.num_classes) throw std::runtime_error("label out of range in " + path);
    return ds;
}

Dataset read_cifar10(const std::vector<std::string>& files) {
    constexpr int kRecord = 3073;
    Dataset ds;
    ds.image_hw = 32;
    ds.channels = 3;
    ds.num_classes = 10;
    for (const auto& path : files) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw std::runtime_error("cannot open CIFAR-10 file: " + path);
        char record[kRecord];
        while (is.read(record, kRecord)) {
            const auto label = static_cast<std::uint8_t>(record[0]);
            if (label >= 10)
                throw std::runtime_error("bad CIFAR-10 label in " + path);
            ds.labels.push_back(label);
            ds.pixels.insert(ds.pixels.end(), record + 1, record + kRecord);
        }
        if (is.gcount() != 0)
            throw std::runtime_error("truncated CIFAR-10 record in " + path);
    }
    if (ds.labels.empty()) throw std::runtime_error("no CIFAR-10 records read");
    return ds;
}

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
    Batch batch;
    batch.images = Tensor({static_cast<int>(indices.size()), ds.channels,
                           ds.image_hw, ds.image_hw});
    batch.labels.resize(indices.size());
    const std::size_t ib = ds.image_bytes();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t idx = indices[i];
        if (idx >= ds.size()) throw std::out_of_range("make_batch: index out of range");
        batch.labels[i] = ds.labels[idx];
        const std::uint8_t* src = ds.pixels.data() + idx * ib;
        float* dst = batch.images.data.data() + i * ib;
        for (std::size_t j = 0; j < ib; ++j)
            dst[j] = static_cast<float>(src[j]) / 127.5f - 1.0f;
    }
    return batch;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t size,
                                                       int batch_size, Rng& rng) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::size_t> order(size);
    for (std::size_t i = 0; i < size; ++i) order[i] = i;
    for (std::size_t i = size; i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start + batch_size <= size;
         start += static_cast<std::size_t>(batch_size))
        batches.emplace_back(order.begin() + start, order.begin() + start + batch_size);
    return batches;
}

std::vector<std::vector<std::size_t>> sequential_batches(std::size_t size,
                                                         int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < size; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(size, start + batch_size);
        std::vector<std::size_t> idx(end - start);
        for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
        batches.push_back(std::move(idx));
    }
    return batches;
}

} // namespace mixpath
