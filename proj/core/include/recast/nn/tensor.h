#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "recast/nn/array.h"
#include "recast/parallel.h"

namespace recast::nn {

inline thread_local bool g_grad_enabled = true;

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
    ~NoGradGuard() { g_grad_enabled = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
};

template <typename T>
struct Node {
    Array<T> value;
    Array<T> grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;
};

template <typename T>
Array<T>& ensure_grad(Node<T>& n) {
    if (!n.has_grad) {
        n.grad = Array<T>(n.value.shape);
        n.has_grad = true;
    }
    return n.grad;
}

// Reverse-mode autodiff handle over a shared graph node.
template <typename T>
class Tensor {
public:
    using Scalar = T;

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    static Tensor leaf(Array<T> v, bool requires_grad = false) {
        auto n = std::make_shared<Node<T>>();
        n->value = std::move(v);
        n->requires_grad = requires_grad && g_grad_enabled;
        return Tensor(std::move(n));
    }
    static Tensor param(Array<T> v) {
        auto n = std::make_shared<Node<T>>();
        n->value = std::move(v);
        n->requires_grad = true;  // parameters stay differentiable regardless of grad mode
        return Tensor(std::move(n));
    }

    bool defined() const { return node_ != nullptr; }
    const Array<T>& val() const { return node_->value; }
    Array<T>& val() { return node_->value; }
    const Shape& shape() const { return node_->value.shape; }
    int64_t numel() const { return node_->value.numel(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool has_grad() const { return node_ && node_->has_grad; }
    const Array<T>& grad() const { return node_->grad; }
    void zero_grad() {
        if (node_) {
            node_->has_grad = false;
            node_->grad = Array<T>();
        }
    }

    // Backpropagates from this scalar node through the recorded graph.
    void backward() const {
        require(node_ != nullptr, ErrorCode::invalid_argument, "backward: undefined tensor");
        require(node_->value.numel() == 1, ErrorCode::invalid_argument,
                "backward: root must be a scalar");
        std::vector<Node<T>*> order = topo_order();
        ensure_grad(*node_);
        for (int64_t i = 0; i < node_->grad.numel(); ++i) node_->grad[i] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node<T>* n = *it;
            if (n->backprop && n->has_grad) n->backprop(*n);
        }
    }

    std::shared_ptr<Node<T>> node_;

private:
    std::vector<Node<T>*> topo_order() const {
        std::vector<Node<T>*> order;
        std::unordered_set<Node<T>*> visited;
        // iterative post-order DFS
        std::vector<std::pair<Node<T>*, size_t>> stack;
        stack.emplace_back(node_.get(), 0);
        visited.insert(node_.get());
        while (!stack.empty()) {
            auto& [n, idx] = stack.back();
            if (idx < n->parents.size()) {
                Node<T>* p = n->parents[idx++].get();
                if (p && !visited.count(p)) {
                    visited.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
        return order;
    }
};

// Creates an op node. When grad is disabled or no parent needs gradients the
// result is a plain leaf and the closure is dropped.
template <typename T>
Tensor<T> make_op(Array<T> out, std::initializer_list<Tensor<T>> parents,
                  std::function<void(Node<T>&)> backprop) {
    bool need = false;
    if (g_grad_enabled)
        for (const auto& p : parents)
            if (p.defined() && p.node_->requires_grad) need = true;
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(out);
    if (need) {
        n->requires_grad = true;
        for (const auto& p : parents)
            if (p.defined()) n->parents.push_back(p.node_);
        n->backprop = std::move(backprop);
    }
    return Tensor<T>(std::move(n));
}

namespace detail {
constexpr int64_t kParallelCutoff = 1 << 15;

inline void maybe_parallel(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n >= kParallelCutoff)
        recast::parallel_for(n, fn);
    else
        fn(0, n);
}
}  // namespace detail

// ---- elementwise ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a.val(), b.val(), "add");
    Array<T> out(a.shape());
    const T* pa = a.val().ptr();
    const T* pb = b.val().ptr();
    T* po = out.ptr();
    detail::maybe_parallel(out.numel(), [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) po[i] = pa[i] + pb[i];
    });
    return make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
        const T* g = self.grad.ptr();
        if (a.requires_grad()) {
            T* ga = ensure_grad(*a.node_).ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            T* gb = ensure_grad(*b.node_).ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) gb[i] += g[i];
        }
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a.val(), b.val(), "sub");
    Array<T> out(a.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.val()[i] - b.val()[i];
    return make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
        const T* g = self.grad.ptr();
        if (a.requires_grad()) {
            T* ga = ensure_grad(*a.node_).ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
            T* gb = ensure_grad(*b.node_).ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) gb[i] -= g[i];
        }
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a.val(), b.val(), "mul");
    Array<T> out(a.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.val()[i] * b.val()[i];
    return make_op<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
        const T* g = self.grad.ptr();
        if (a.requires_grad()) {
            T* ga = ensure_grad(*a.node_).ptr();
            const T* pb = b.val().ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i] * pb[i];
        }
        if (b.requires_grad()) {
            T* gb = ensure_grad(*b.node_).ptr();
            const T* pa = a.val().ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) gb[i] += g[i] * pa[i];
        }
    });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, double s) {
    Array<T> out(a.shape());
    T ts = static_cast<T>(s);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.val()[i] * ts;
    return make_op<T>(std::move(out), {a}, [a, ts](Node<T>& self) {
        if (!a.requires_grad()) return;
        T* ga = ensure_grad(*a.node_).ptr();
        const T* g = self.grad.ptr();
        for (int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i] * ts;
    });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, double s) {
    Array<T> out(a.shape());
    T ts = static_cast<T>(s);
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.val()[i] + ts;
    return make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
        if (!a.requires_grad()) return;
        T* ga = ensure_grad(*a.node_).ptr();
        const T* g = self.grad.ptr();
        for (int64_t i = 0; i < self.grad.numel(); ++i) ga[i] += g[i];
    });
}

template <typename T>
Tensor<T> silu(const Tensor<T>& a) {
    Array<T> out(a.shape());
    const T* pa = a.val().ptr();
    T* po = out.ptr();
    detail::maybe_parallel(out.numel(), [&](int64_t i0, int64_t i1) {
        for (int64_t i = i0; i < i1; ++i) {
            T sig = T(1) / (T(1) + std::exp(-pa[i]));
            po[i] = pa[i] * sig;
        }
    });
    return make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
        if (!a.requires_grad()) return;
        T* ga = ensure_grad(*a.node_).ptr();
        const T* g = self.grad.ptr();
        const T* pa = a.val().ptr();
        for (int64_t i = 0; i < self.grad.numel(); ++i) {
            T sig = T(1) / (T(1) + std::exp(-pa[i]));
            ga[i] += g[i] * sig * (T(1) + pa[i] * (T(1) - sig));
        }
    });
}

// ---- reductions ----

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
    // pairwise-free sequential sum: deterministic
    T acc = T(0);
    for (int64_t i = 0; i < a.numel(); ++i) acc += a.val()[i];
    Array<T> out({1});
    out[0] = acc;
    return make_op<T>(std::move(out), {a}, [a](Node<T>& self) {
        if (!a.requires_grad()) return;
        T g = self.grad[0];
        T* ga = ensure_grad(*a.node_).ptr();
        for (int64_t i = 0; i < a.numel(); ++i) ga[i] += g;
    });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
    return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

}  // namespace recast::nn
