#pragma once

#include <map>
#include <set>
#include <string>

#include "recast/nn/ops.h"
#include "recast/rng.h"
#include "recast/util.h"

namespace recast::nn {

// Named parameter registry. Iteration order (std::map) is the canonical
// order for optimizer updates and checksums.
template <typename T>
struct ParamStore {
    std::map<std::string, Tensor<T>> params;

    Tensor<T> create(const std::string& name, Shape shape,
                     const std::function<void(Array<T>&)>& init) {
        require(!params.count(name), ErrorCode::invalid_argument,
                "ParamStore: duplicate parameter " + name);
        Array<T> a(std::move(shape));
        init(a);
        Tensor<T> t = Tensor<T>::param(std::move(a));
        params.emplace(name, t);
        return t;
    }

    Tensor<T> get(const std::string& name) const {
        auto it = params.find(name);
        require(it != params.end(), ErrorCode::invalid_argument,
                "ParamStore: unknown parameter " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return params.count(name) != 0; }

    int64_t count(const std::string& prefix = "") const {
        int64_t n = 0;
        for (const auto& [name, t] : params)
            if (name.rfind(prefix, 0) == 0) n += t.numel();
        return n;
    }

    void zero_grads() {
        for (auto& [name, t] : params) t.zero_grad();
    }

    void set_trainable(const std::string& prefix, bool trainable) {
        for (auto& [name, t] : params)
            if (name.rfind(prefix, 0) == 0) t.node_->requires_grad = trainable;
    }

    uint32_t checksum(const std::string& prefix = "") const {
        uint32_t crc = crc32_bytes(0, nullptr, 0);
        for (const auto& [name, t] : params) {
            if (name.rfind(prefix, 0) != 0) continue;
            crc = crc32_str(crc, name);
            crc = crc32_bytes(crc, t.val().ptr(), sizeof(T) * static_cast<size_t>(t.numel()));
        }
        return crc;
    }
};

// ---- initializers ----

template <typename T>
std::function<void(Array<T>&)> init_zero() {
    return [](Array<T>& a) {
        for (int64_t i = 0; i < a.numel(); ++i) a[i] = T(0);
    };
}

template <typename T>
std::function<void(Array<T>&)> init_const(double v) {
    return [v](Array<T>& a) {
        for (int64_t i = 0; i < a.numel(); ++i) a[i] = static_cast<T>(v);
    };
}

// N(0, std^2)
template <typename T>
std::function<void(Array<T>&)> init_normal(Rng& rng, double std_dev) {
    return [&rng, std_dev](Array<T>& a) {
        for (int64_t i = 0; i < a.numel(); ++i)
            a[i] = static_cast<T>(rng.normal() * std_dev);
    };
}

// Kaiming-style scaled normal for fan_in inputs.
template <typename T>
std::function<void(Array<T>&)> init_kaiming(Rng& rng, int64_t fan_in) {
    return init_normal<T>(rng, std::sqrt(2.0 / static_cast<double>(fan_in)));
}

// ---- layers ----

template <typename T>
struct Conv2dLayer {
    Tensor<T> w, b;
    int stride = 1, pad = 1;

    static Conv2dLayer make(ParamStore<T>& store, const std::string& name, int in_ch, int out_ch,
                            int k, int stride, int pad, Rng& rng, bool zero_init = false) {
        Conv2dLayer l;
        int64_t fan_in = static_cast<int64_t>(in_ch) * k * k;
        l.w = store.create(name + ".w", {out_ch, in_ch, k, k},
                           zero_init ? init_zero<T>() : init_kaiming<T>(rng, fan_in));
        l.b = store.create(name + ".b", {out_ch}, init_zero<T>());
        l.stride = stride;
        l.pad = pad;
        return l;
    }

    Tensor<T> forward(const Tensor<T>& x) const { return conv2d(x, w, b, stride, pad); }
};

template <typename T>
struct LinearLayer {
    Tensor<T> w, b;

    static LinearLayer make(ParamStore<T>& store, const std::string& name, int in_dim, int out_dim,
                            Rng& rng, bool zero_init = false) {
        LinearLayer l;
        l.w = store.create(name + ".w", {out_dim, in_dim},
                           zero_init ? init_zero<T>()
                                     : init_normal<T>(rng, std::sqrt(1.0 / in_dim)));
        l.b = store.create(name + ".b", {out_dim}, init_zero<T>());
        return l;
    }

    Tensor<T> forward(const Tensor<T>& x) const { return linear(x, w, b); }
};

template <typename T>
struct GroupNormLayer {
    Tensor<T> gamma, beta;
    int groups = 8;

    static GroupNormLayer make(ParamStore<T>& store, const std::string& name, int channels,
                               int groups) {
        GroupNormLayer l;
        l.gamma = store.create(name + ".gamma", {channels}, init_const<T>(1.0));
        l.beta = store.create(name + ".beta", {channels}, init_zero<T>());
        l.groups = std::min(groups, channels);
        while (channels % l.groups != 0) --l.groups;
        return l;
    }

    Tensor<T> forward(const Tensor<T>& x) const { return group_norm(x, gamma, beta, groups); }
};

// Multi-head attention over [B, L, C] queries and [B, Lk, Ck] context.
template <typename T>
struct MultiHeadAttention {
    LinearLayer<T> q, k, v, o;
    int heads = 4;
    int model_dim = 0;

    static MultiHeadAttention make(ParamStore<T>& store, const std::string& name, int dim,
                                   int context_dim, int heads, Rng& rng) {
        require(dim % heads == 0, ErrorCode::invalid_shape,
                "attention: dim must divide by heads");
        MultiHeadAttention m;
        m.q = LinearLayer<T>::make(store, name + ".q", dim, dim, rng);
        m.k = LinearLayer<T>::make(store, name + ".k", context_dim, dim, rng);
        m.v = LinearLayer<T>::make(store, name + ".v", context_dim, dim, rng);
        m.o = LinearLayer<T>::make(store, name + ".o", dim, dim, rng);
        m.heads = heads;
        m.model_dim = dim;
        return m;
    }

    Tensor<T> forward(const Tensor<T>& x_q, const Tensor<T>& x_kv) const {
        int B = x_q.shape()[0], Lq = x_q.shape()[1];
        int Lk = x_kv.shape()[1];
        int C = model_dim, H = heads, Dh = C / heads;
        auto split_heads = [&](Tensor<T> t, int L) {
            t = reshape(t, {B, L, H, Dh});
            t = permute(t, {0, 2, 1, 3});  // [B, H, L, Dh]
            return reshape(t, {B * H, L, Dh});
        };
        Tensor<T> qh = split_heads(q.forward(x_q), Lq);
        Tensor<T> kh = split_heads(k.forward(x_kv), Lk);
        Tensor<T> vh = split_heads(v.forward(x_kv), Lk);

        Tensor<T> kt = permute(kh, {0, 2, 1});  // [B*H, Dh, Lk]
        Tensor<T> attn = softmax_last(mul_scalar(bmm(qh, kt), 1.0 / std::sqrt(double(Dh))));
        Tensor<T> ctx = bmm(attn, vh);  // [B*H, Lq, Dh]
        ctx = reshape(ctx, {B, H, Lq, Dh});
        ctx = permute(ctx, {0, 2, 1, 3});
        ctx = reshape(ctx, {B, Lq, C});
        return o.forward(ctx);
    }
};

}  // namespace recast::nn
