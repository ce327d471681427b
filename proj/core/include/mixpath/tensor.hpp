#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixpath/rng.hpp"

namespace mixpath {

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense n-dimensional array, contiguous row-major storage, with an optional
// gradient buffer of the same shape. float is the training scalar; double is
// used by the gradient-check instantiations.
template <typename S>
struct TensorT {
    std::vector<int> shape;
    std::vector<S> data;
    std::vector<S> grad; // empty until a backward pass needs it

    TensorT() = default;

    explicit TensorT(std::vector<int> shp) : shape(std::move(shp)) {
        data.assign(numel_of(shape), S(0));
    }

    static TensorT zeros(std::vector<int> shp) { return TensorT(std::move(shp)); }

    static TensorT full(std::vector<int> shp, S value) {
        TensorT t(std::move(shp));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    static TensorT from(std::vector<int> shp, std::vector<S> values) {
        TensorT t;
        t.shape = std::move(shp);
        if (values.size() != numel_of(t.shape))
            throw DimensionError("tensor data length does not match shape");
        t.data = std::move(values);
        return t;
    }

    static TensorT randn(std::vector<int> shp, Rng& rng, double stddev = 1.0) {
        TensorT t(std::move(shp));
        for (auto& v : t.data) v = static_cast<S>(rng.normal() * stddev);
        return t;
    }

    static std::size_t numel_of(const std::vector<int>& shp) {
        std::size_t n = 1;
        for (int d : shp) {
            if (d <= 0) throw DimensionError("tensor dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }

    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), S(0));
    }

    // NCHW accessors for the 4-d case
    S& at4(int n, int c, int h, int w) {
        return data[idx4(n, c, h, w)];
    }
    S at4(int n, int c, int h, int w) const {
        return data[idx4(n, c, h, w)];
    }
    std::size_t idx4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w;
    }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void check_finite(const char* what) const {
        if (!all_finite())
            throw NumericError(std::string("non-finite values in ") + what);
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

using Tensor = TensorT<float>;

} // namespace mixpath
