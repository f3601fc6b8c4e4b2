#pragma once

#include <map>
#include <set>
#include <string>

#include "recast/nn/layers.h"

namespace recast::nn {

// Adam with bias correction. Moment buffers are keyed by parameter name so
// they serialize alongside the parameters.
template <typename T>
struct Adam {
    double lr = 3e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t t = 0;

    std::map<std::string, Array<T>> m, v;

    // Updates every parameter that carries a gradient. Skips frozen params
    // (requires_grad == false) and params without grads.
    void step(ParamStore<T>& store) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (auto& [name, p] : store.params) {
            if (!p.requires_grad() || !p.has_grad()) continue;
            Array<T>& mom = m.try_emplace(name, Array<T>(p.shape())).first->second;
            Array<T>& vel = v.try_emplace(name, Array<T>(p.shape())).first->second;
            const Array<T>& g = p.grad();
            Array<T>& w = p.val();
            T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
            for (int64_t i = 0; i < w.numel(); ++i) {
                mom[i] = b1 * mom[i] + (T(1) - b1) * g[i];
                vel[i] = b2 * vel[i] + (T(1) - b2) * g[i] * g[i];
                double mhat = static_cast<double>(mom[i]) / bc1;
                double vhat = static_cast<double>(vel[i]) / bc2;
                w[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

}  // namespace recast::nn
