#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mixpath {

// SGD with classical momentum and decoupled-from-nothing weight decay folded
// into the gradient:
//   v <- momentum * v + (g + weight_decay * w)
//   w <- w - lr * v
// The velocity buffer belongs to the caller and must match the parameter
// size (it is created lazily on first use).
template <typename S>
void sgd_step(std::vector<S>& w, const std::vector<S>& g, std::vector<S>& v,
              double lr, double momentum, double weight_decay) {
    if (v.size() != w.size()) v.assign(w.size(), S(0));
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double vel = momentum * static_cast<double>(v[i]) +
                           (static_cast<double>(g[i]) + weight_decay * static_cast<double>(w[i]));
        v[i] = static_cast<S>(vel);
        w[i] = static_cast<S>(static_cast<double>(w[i]) - lr * vel);
    }
}

// Cosine annealing from lr0 at step 0 to 0 at step == total.
inline double cosine_lr(double lr0, int step, int total) {
    if (step < 0 || step > total)
        throw std::invalid_argument("cosine_lr: step outside [0, total]");
    if (total == 0) return lr0;
    return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * step / total));
}

} // namespace mixpath
