#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixpath/rng.hpp"
#include "mixpath/tensor.hpp"

namespace mixpath {

// Image classification set held fully in memory as quantized bytes, so the
// in-memory content and the on-disk content are identical by construction.
struct Dataset {
    int image_hw = 0;
    int channels = 0;
    int num_classes = 0;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint8_t> pixels; // count * channels * hw * hw, CHW per image

    std::size_t size() const { return labels.size(); }
    std::size_t image_bytes() const {
        return static_cast<std::size_t>(channels) * image_hw * image_hw;
    }
};

// Deterministic 4-class (configurable) toy problem: each image is an
// oriented sinusoidal grating whose spatial frequency is fixed by the class,
// windowed by a randomly placed Gaussian blob, plus pixel noise. Classes
// therefore differ in frequency content, which makes accuracy genuinely
// sensitive to the kernel sizes a model picks.
Dataset gen_synthetic(std::uint64_t seed, int count, int hw, int num_classes);

// Binary container: magic "MXDS", u32 version, u32 count, u16 hw,
// u8 channels, u8 classes, labels, pixels. Little-endian.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

// Canonical CIFAR-10 binary batches: 3073-byte records, 1 label byte then
// 3072 RGB bytes. Concatenates all files given.
Dataset read_cifar10(const std::vector<std::string>& files);

// Float batch in [-1, 1], NCHW.
struct Batch {
    Tensor images;
    std::vector<int> labels;
};

// Materialize one batch from explicit indices (indices must be in range).
Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices);

// Deterministic epoch iteration: a seeded shuffle of [0, size) chopped into
// fixed-size batches; the last partial batch is dropped (training) or kept
// (evaluation streams use sequential_batches).
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t size,
                                                       int batch_size, Rng& rng);
std::vector<std::vector<std::size_t>> sequential_batches(std::size_t size,
                                                         int batch_size);

} // namespace mixpath
