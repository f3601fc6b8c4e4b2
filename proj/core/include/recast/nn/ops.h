#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "recast/nn/tensor.h"

namespace recast::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using MapC = Eigen::Map<const MatRM<T>>;

// ---- matmul / linear ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape().size() == 2 && b.shape().size() == 2 && a.shape()[1] == b.shape()[0],
            ErrorCode::invalid_shape, "matmul: incompatible shapes");
    int M = a.shape()[0], K = a.shape()[1], N = b.shape()[1];
    Array<T> out({M, N});
    MapC<T> A(a.val().ptr(), M, K);
    MapC<T> B(b.val().ptr(), K, N);
    MapM<T> C(out.ptr(), M, N);
    C.noalias() = A * B;
    return make_op<T>(std::move(out), {a, b}, [a, b, M, K, N](Node<T>& self) {
        MapC<T> G(self.grad.ptr(), M, N);
        if (a.requires_grad()) {
            MapM<T> GA(ensure_grad(*a.node_).ptr(), M, K);
            MapC<T> B(b.val().ptr(), K, N);
            GA.noalias() += G * B.transpose();
        }
        if (b.requires_grad()) {
            MapM<T> GB(ensure_grad(*b.node_).ptr(), K, N);
            MapC<T> A(a.val().ptr(), M, K);
            GB.noalias() += A.transpose() * G;
        }
    });
}

// Batched matmul: [B,M,K] x [B,K,N] -> [B,M,N].
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape().size() == 3 && b.shape().size() == 3 && a.shape()[0] == b.shape()[0] &&
                a.shape()[2] == b.shape()[1],
            ErrorCode::invalid_shape, "bmm: incompatible shapes");
    int B = a.shape()[0], M = a.shape()[1], K = a.shape()[2], N = b.shape()[2];
    Array<T> out({B, M, N});
    parallel_for(B, [&](int64_t b0, int64_t b1) {
        for (int64_t i = b0; i < b1; ++i) {
            MapC<T> A(a.val().ptr() + i * M * K, M, K);
            MapC<T> Bm(b.val().ptr() + i * K * N, K, N);
            MapM<T> C(out.ptr() + i * M * N, M, N);
            C.noalias() = A * Bm;
        }
    });
    return make_op<T>(std::move(out), {a, b}, [a, b, B, M, K, N](Node<T>& self) {
        if (a.requires_grad()) {
            Array<T>& ga = ensure_grad(*a.node_);
            parallel_for(B, [&](int64_t b0, int64_t b1) {
                for (int64_t i = b0; i < b1; ++i) {
                    MapC<T> G(self.grad.ptr() + i * M * N, M, N);
                    MapC<T> Bm(b.val().ptr() + i * K * N, K, N);
                    MapM<T> GA(ga.ptr() + i * M * K, M, K);
                    GA.noalias() += G * Bm.transpose();
                }
            });
        }
        if (b.requires_grad()) {
            Array<T>& gb = ensure_grad(*b.node_);
            parallel_for(B, [&](int64_t b0, int64_t b1) {
                for (int64_t i = b0; i < b1; ++i) {
                    MapC<T> G(self.grad.ptr() + i * M * N, M, N);
                    MapC<T> A(a.val().ptr() + i * M * K, M, K);
                    MapM<T> GB(gb.ptr() + i * K * N, K, N);
                    GB.noalias() += A.transpose() * G;
                }
            });
        }
    });
}

// x [..., K] with weight [O, K] and optional bias [O] -> [..., O].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b = Tensor<T>()) {
    int K = x.shape().back();
    require(w.shape().size() == 2 && w.shape()[1] == K, ErrorCode::invalid_shape,
            "linear: weight shape mismatch");
    int O = w.shape()[0];
    int64_t R = x.numel() / K;
    Shape out_shape = x.shape();
    out_shape.back() = O;
    Array<T> out(out_shape);
    MapC<T> X(x.val().ptr(), R, K);
    MapC<T> W(w.val().ptr(), O, K);
    MapM<T> Y(out.ptr(), R, O);
    Y.noalias() = X * W.transpose();
    if (b.defined()) {
        require(b.shape().size() == 1 && b.shape()[0] == O, ErrorCode::invalid_shape,
                "linear: bias shape mismatch");
        for (int64_t r = 0; r < R; ++r)
            for (int o = 0; o < O; ++o) out[r * O + o] += b.val()[o];
    }
    return make_op<T>(std::move(out), {x, w, b}, [x, w, b, R, K, O](Node<T>& self) {
        MapC<T> G(self.grad.ptr(), R, O);
        if (x.requires_grad()) {
            MapM<T> GX(ensure_grad(*x.node_).ptr(), R, K);
            MapC<T> W(w.val().ptr(), O, K);
            GX.noalias() += G * W;
        }
        if (w.requires_grad()) {
            MapM<T> GW(ensure_grad(*w.node_).ptr(), O, K);
            MapC<T> X(x.val().ptr(), R, K);
            GW.noalias() += G.transpose() * X;
        }
        if (b.defined() && b.requires_grad()) {
            T* gb = ensure_grad(*b.node_).ptr();
            for (int64_t r = 0; r < R; ++r)
                for (int o = 0; o < O; ++o) gb[o] += self.grad[r * O + o];
        }
    });
}

// ---- conv2d (im2col + gemm) ----

namespace detail {

template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho, int Wo,
            T* col) {
    // col layout: [C*kh*kw, Ho*Wo]
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                T* dst = col + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) *
                                   (static_cast<int64_t>(Ho) * Wo);
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride - pad + kx;
                        dst[static_cast<int64_t>(oy) * Wo + ox] =
                            (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                ? x[(static_cast<int64_t>(c) * H + iy) * W + ix]
                                : T(0);
                    }
                }
            }
}

template <typename T>
void col2im_accum(const T* col, int C, int H, int W, int kh, int kw, int stride, int pad, int Ho,
                  int Wo, T* dx) {
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                const T* src = col + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) *
                                         (static_cast<int64_t>(Ho) * Wo);
                for (int oy = 0; oy < Ho; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= H) continue;
                    for (int ox = 0; ox < Wo; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= W) continue;
                        dx[(static_cast<int64_t>(c) * H + iy) * W + ix] +=
                            src[static_cast<int64_t>(oy) * Wo + ox];
                    }
                }
            }
}

}  // namespace detail

// x [N,C,H,W], w [O,C,kh,kw], optional bias [O].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride, int pad) {
    require(x.shape().size() == 4 && w.shape().size() == 4, ErrorCode::invalid_shape,
            "conv2d: expected 4-d input and weight");
    int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    int O = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
    require(w.shape()[1] == C, ErrorCode::invalid_shape, "conv2d: channel mismatch");
    int Ho = (H + 2 * pad - kh) / stride + 1;
    int Wo = (W + 2 * pad - kw) / stride + 1;
    require(Ho >= 1 && Wo >= 1, ErrorCode::invalid_shape, "conv2d: output would be empty");

    int CKK = C * kh * kw;
    int64_t plane = static_cast<int64_t>(Ho) * Wo;
    Array<T> out({N, O, Ho, Wo});

    parallel_for(N, [&](int64_t n0, int64_t n1) {
        std::vector<T> col(static_cast<size_t>(CKK) * plane);
        for (int64_t n = n0; n < n1; ++n) {
            detail::im2col(x.val().ptr() + n * C * H * W, C, H, W, kh, kw, stride, pad, Ho, Wo,
                           col.data());
            MapC<T> Wm(w.val().ptr(), O, CKK);
            MapC<T> Col(col.data(), CKK, plane);
            MapM<T> Y(out.ptr() + n * O * plane, O, plane);
            Y.noalias() = Wm * Col;
            if (b.defined()) {
                for (int o = 0; o < O; ++o) {
                    T bo = b.val()[o];
                    T* dst = out.ptr() + (n * O + o) * plane;
                    for (int64_t i = 0; i < plane; ++i) dst[i] += bo;
                }
            }
        }
    });

    return make_op<T>(
        std::move(out), {x, w, b},
        [x, w, b, N, C, H, W, O, kh, kw, stride, pad, Ho, Wo, CKK, plane](Node<T>& self) {
            bool need_dx = x.requires_grad();
            bool need_dw = w.requires_grad();
            bool need_db = b.defined() && b.requires_grad();
            Array<T>* gx = need_dx ? &ensure_grad(*x.node_) : nullptr;

            int nthreads = std::max<int>(1, std::min<int64_t>(thread_count(), N));
            int64_t per = (N + nthreads - 1) / nthreads;
            std::vector<Array<T>> dw_part, db_part;
            if (need_dw) dw_part.assign(static_cast<size_t>(nthreads), Array<T>(w.shape()));
            if (need_db) db_part.assign(static_cast<size_t>(nthreads), Array<T>({O}));

            parallel_for(nthreads, [&](int64_t c0, int64_t c1) {
                std::vector<T> col(static_cast<size_t>(CKK) * plane);
                std::vector<T> dcol(static_cast<size_t>(CKK) * plane);
                for (int64_t chunk = c0; chunk < c1; ++chunk) {
                    int64_t lo = chunk * per, hi = std::min<int64_t>(N, lo + per);
                    for (int64_t n = lo; n < hi; ++n) {
                        MapC<T> G(self.grad.ptr() + n * O * plane, O, plane);
                        if (need_dw || need_dx)
                            detail::im2col(x.val().ptr() + n * C * H * W, C, H, W, kh, kw, stride,
                                           pad, Ho, Wo, col.data());
                        if (need_dw) {
                            MapM<T> DW(dw_part[static_cast<size_t>(chunk)].ptr(), O, CKK);
                            MapC<T> Col(col.data(), CKK, plane);
                            DW.noalias() += G * Col.transpose();
                        }
                        if (need_db) {
                            T* db = db_part[static_cast<size_t>(chunk)].ptr();
                            for (int o = 0; o < O; ++o) {
                                T acc = T(0);
                                const T* g = self.grad.ptr() + (n * O + o) * plane;
                                for (int64_t i = 0; i < plane; ++i) acc += g[i];
                                db[o] += acc;
                            }
                        }
                        if (need_dx) {
                            MapM<T> DCol(dcol.data(), CKK, plane);
                            MapC<T> Wm(w.val().ptr(), O, CKK);
                            DCol.noalias() = Wm.transpose() * G;
                            detail::col2im_accum(dcol.data(), C, H, W, kh, kw, stride, pad, Ho, Wo,
                                                 gx->ptr() + n * C * H * W);
                        }
                    }
                }
            });
            if (need_dw) {
                Array<T>& gw = ensure_grad(*w.node_);
                for (int tIdx = 0; tIdx < nthreads; ++tIdx)
                    for (int64_t i = 0; i < gw.numel(); ++i)
                        gw[i] += dw_part[static_cast<size_t>(tIdx)][i];
            }
            if (need_db) {
                Array<T>& gb = ensure_grad(*b.node_);
                for (int tIdx = 0; tIdx < nthreads; ++tIdx)
                    for (int o = 0; o < O; ++o) gb[o] += db_part[static_cast<size_t>(tIdx)][o];
            }
        });
}

// ---- group norm ----

namespace detail {

template <typename T>
void group_stats(const Array<T>& xv, int64_t n, int g, int C, int cg, int64_t m, double eps,
                 T& mean, T& inv_std) {
    const T* base = xv.ptr() + (n * C + static_cast<int64_t>(g) * cg) *
                                   (static_cast<int64_t>(xv.shape[2]) * xv.shape[3]);
    T sum = T(0);
    for (int64_t i = 0; i < m; ++i) sum += base[i];
    mean = sum / static_cast<T>(m);
    T var = T(0);
    for (int64_t i = 0; i < m; ++i) {
        T d = base[i] - mean;
        var += d * d;
    }
    var /= static_cast<T>(m);
    inv_std = T(1) / std::sqrt(var + static_cast<T>(eps));
}

}  // namespace detail

template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int groups,
                     double eps = 1e-5) {
    require(x.shape().size() == 4, ErrorCode::invalid_shape, "group_norm: expected [N,C,H,W]");
    int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    require(C % groups == 0, ErrorCode::invalid_shape, "group_norm: C must divide by groups");
    require(gamma.shape() == Shape{C} && beta.shape() == Shape{C}, ErrorCode::invalid_shape,
            "group_norm: affine params must be [C]");
    int cg = C / groups;
    int64_t m = static_cast<int64_t>(cg) * H * W;
    Array<T> out(x.shape());
    parallel_for(static_cast<int64_t>(N) * groups, [&](int64_t j0, int64_t j1) {
        for (int64_t j = j0; j < j1; ++j) {
            int64_t n = j / groups;
            int g = static_cast<int>(j % groups);
            T mean, inv_std;
            detail::group_stats(x.val(), n, g, C, cg, m, eps, mean, inv_std);
            for (int ci = 0; ci < cg; ++ci) {
                int c = g * cg + ci;
                const T* src = x.val().ptr() + (n * C + c) * H * W;
                T* dst = out.ptr() + (n * C + c) * H * W;
                T ga = gamma.val()[c], be = beta.val()[c];
                for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i)
                    dst[i] = (src[i] - mean) * inv_std * ga + be;
            }
        }
    });
    return make_op<T>(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, N, C, H, W, groups, cg, m, eps](Node<T>& self) {
            int64_t hw = static_cast<int64_t>(H) * W;
            bool need_dx = x.requires_grad();
            Array<T>* gx = need_dx ? &ensure_grad(*x.node_) : nullptr;
            // dgamma/dbeta accumulated per (n,g) then reduced: do serially over n*groups to stay deterministic
            Array<T>* ggamma = gamma.requires_grad() ? &ensure_grad(*gamma.node_) : nullptr;
            Array<T>* gbeta = beta.requires_grad() ? &ensure_grad(*beta.node_) : nullptr;
            for (int64_t n = 0; n < N; ++n)
                for (int g = 0; g < groups; ++g) {
                    T mean, inv_std;
                    detail::group_stats(x.val(), n, g, C, cg, m, eps, mean, inv_std);
                    // reductions over the group
                    T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
                    for (int ci = 0; ci < cg; ++ci) {
                        int c = g * cg + ci;
                        const T* src = x.val().ptr() + (n * C + c) * hw;
                        const T* gr = self.grad.ptr() + (n * C + c) * hw;
                        T ga = gamma.val()[c];
                        for (int64_t i = 0; i < hw; ++i) {
                            T xhat = (src[i] - mean) * inv_std;
                            T dxhat = gr[i] * ga;
                            sum_dxhat += dxhat;
                            sum_dxhat_xhat += dxhat * xhat;
                            if (ggamma) (*ggamma)[c] += gr[i] * xhat;
                            if (gbeta) (*gbeta)[c] += gr[i];
                        }
                    }
                    if (!need_dx) continue;
                    T mean_dxhat = sum_dxhat / static_cast<T>(m);
                    T mean_dxhat_xhat = sum_dxhat_xhat / static_cast<T>(m);
                    for (int ci = 0; ci < cg; ++ci) {
                        int c = g * cg + ci;
                        const T* src = x.val().ptr() + (n * C + c) * hw;
                        const T* gr = self.grad.ptr() + (n * C + c) * hw;
                        T* dst = gx->ptr() + (n * C + c) * hw;
                        T ga = gamma.val()[c];
                        for (int64_t i = 0; i < hw; ++i) {
                            T xhat = (src[i] - mean) * inv_std;
                            T dxhat = gr[i] * ga;
                            dst[i] += inv_std * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                        }
                    }
                }
        });
}

// ---- softmax over the last dim ----

template <typename T>
Tensor<T> softmax_last(const Tensor<T>& x) {
    int L = x.shape().back();
    int64_t R = x.numel() / L;
    Array<T> out(x.shape());
    parallel_for(R, [&](int64_t r0, int64_t r1) {
        for (int64_t r = r0; r < r1; ++r) {
            const T* src = x.val().ptr() + r * L;
            T* dst = out.ptr() + r * L;
            T mx = src[0];
            for (int i = 1; i < L; ++i) mx = std::max(mx, src[i]);
            T sum = T(0);
            for (int i = 0; i < L; ++i) {
                dst[i] = std::exp(src[i] - mx);
                sum += dst[i];
            }
            T inv = T(1) / sum;
            for (int i = 0; i < L; ++i) dst[i] *= inv;
        }
    });
    return make_op<T>(std::move(out), {x}, [x, L, R](Node<T>& self) {
        if (!x.requires_grad()) return;
        Array<T>& gx = ensure_grad(*x.node_);
        for (int64_t r = 0; r < R; ++r) {
            const T* y = self.value.ptr() + r * L;
            const T* g = self.grad.ptr() + r * L;
            T* dst = gx.ptr() + r * L;
            T dot = T(0);
            for (int i = 0; i < L; ++i) dot += g[i] * y[i];
            for (int i = 0; i < L; ++i) dst[i] += (g[i] - dot) * y[i];
        }
    });
}

// ---- shape ops ----

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    require(shape_numel(shape) == x.numel(), ErrorCode::invalid_shape,
            "reshape: element count mismatch");
    Array<T> out(std::move(shape), x.val().data);
    return make_op<T>(std::move(out), {x}, [x](Node<T>& self) {
        if (!x.requires_grad()) return;
        T* gx = ensure_grad(*x.node_).ptr();
        const T* g = self.grad.ptr();
        for (int64_t i = 0; i < self.grad.numel(); ++i) gx[i] += g[i];
    });
}

namespace detail {

inline std::vector<int64_t> row_major_strides(const Shape& s) {
    std::vector<int64_t> st(s.size());
    int64_t acc = 1;
    for (int i = static_cast<int>(s.size()) - 1; i >= 0; --i) {
        st[static_cast<size_t>(i)] = acc;
        acc *= s[static_cast<size_t>(i)];
    }
    return st;
}

template <typename T>
void permute_copy(const T* src, const Shape& in_shape, const std::vector<int>& perm, T* dst,
                  bool accumulate) {
    size_t rank = in_shape.size();
    Shape out_shape(rank);
    for (size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[static_cast<size_t>(perm[i])];
    auto in_strides = row_major_strides(in_shape);
    std::vector<int64_t> strides(rank);
    for (size_t i = 0; i < rank; ++i) strides[i] = in_strides[static_cast<size_t>(perm[i])];
    int64_t total = shape_numel(out_shape);
    std::vector<int> idx(rank, 0);
    int64_t src_off = 0;
    for (int64_t lin = 0; lin < total; ++lin) {
        if (accumulate)
            dst[lin] += src[src_off];
        else
            dst[lin] = src[src_off];
        // increment multi-index
        for (int d = static_cast<int>(rank) - 1; d >= 0; --d) {
            idx[static_cast<size_t>(d)]++;
            src_off += strides[static_cast<size_t>(d)];
            if (idx[static_cast<size_t>(d)] < out_shape[static_cast<size_t>(d)]) break;
            src_off -= strides[static_cast<size_t>(d)] * out_shape[static_cast<size_t>(d)];
            idx[static_cast<size_t>(d)] = 0;
        }
    }
}

}  // namespace detail

template <typename T>
Tensor<T> permute(const Tensor<T>& x, std::vector<int> perm) {
    size_t rank = x.shape().size();
    require(perm.size() == rank, ErrorCode::invalid_shape, "permute: rank mismatch");
    Shape out_shape(rank);
    for (size_t i = 0; i < rank; ++i) out_shape[i] = x.shape()[static_cast<size_t>(perm[i])];
    Array<T> out(out_shape);
    detail::permute_copy(x.val().ptr(), x.shape(), perm, out.ptr(), false);
    return make_op<T>(std::move(out), {x}, [x, perm, rank](Node<T>& self) {
        if (!x.requires_grad()) return;
        // inverse permutation routes the gradient back
        std::vector<int> inv(rank);
        for (size_t i = 0; i < rank; ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);
        detail::permute_copy(self.grad.ptr(), self.grad.shape, inv,
                             ensure_grad(*x.node_).ptr(), true);
    });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int dim) {
    require(!xs.empty(), ErrorCode::invalid_argument, "concat: empty input list");
    Shape shape = xs[0].shape();
    size_t rank = shape.size();
    require(dim >= 0 && static_cast<size_t>(dim) < rank, ErrorCode::invalid_shape,
            "concat: bad dim");
    int total = 0;
    for (const auto& t : xs) {
        require(t.shape().size() == rank, ErrorCode::invalid_shape, "concat: rank mismatch");
        for (size_t i = 0; i < rank; ++i)
            if (static_cast<int>(i) != dim)
                require(t.shape()[i] == shape[i], ErrorCode::invalid_shape,
                        "concat: shape mismatch off the concat dim");
        total += t.shape()[static_cast<size_t>(dim)];
    }
    Shape out_shape = shape;
    out_shape[static_cast<size_t>(dim)] = total;

    int64_t outer = 1;
    for (int i = 0; i < dim; ++i) outer *= shape[static_cast<size_t>(i)];
    int64_t inner = 1;
    for (size_t i = static_cast<size_t>(dim) + 1; i < rank; ++i) inner *= shape[i];

    Array<T> out(out_shape);
    int64_t out_row = static_cast<int64_t>(total) * inner;
    int64_t off = 0;
    for (const auto& t : xs) {
        int64_t len = static_cast<int64_t>(t.shape()[static_cast<size_t>(dim)]) * inner;
        for (int64_t o = 0; o < outer; ++o)
            std::copy_n(t.val().ptr() + o * len, len, out.ptr() + o * out_row + off);
        off += len;
    }

    // make_op needs an initializer_list; build manually for a vector of parents
    bool need = false;
    if (g_grad_enabled)
        for (const auto& p : xs)
            if (p.requires_grad()) need = true;
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(out);
    if (need) {
        node->requires_grad = true;
        for (const auto& p : xs) node->parents.push_back(p.node_);
        node->backprop = [xs, outer, out_row](Node<T>& self) {
            int64_t off2 = 0;
            for (const auto& t : xs) {
                int64_t seg = t.numel() / outer;
                if (t.requires_grad()) {
                    T* g = ensure_grad(*t.node_).ptr();
                    for (int64_t o = 0; o < outer; ++o) {
                        const T* src = self.grad.ptr() + o * out_row + off2;
                        for (int64_t i = 0; i < seg; ++i) g[o * seg + i] += src[i];
                    }
                }
                off2 += seg;
            }
        };
    }
    return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int dim, int start, int len) {
    const Shape& shape = x.shape();
    size_t rank = shape.size();
    require(dim >= 0 && static_cast<size_t>(dim) < rank, ErrorCode::invalid_shape,
            "slice: bad dim");
    require(start >= 0 && len >= 1 && start + len <= shape[static_cast<size_t>(dim)],
            ErrorCode::invalid_shape, "slice: range out of bounds");
    int64_t outer = 1;
    for (int i = 0; i < dim; ++i) outer *= shape[static_cast<size_t>(i)];
    int64_t inner = 1;
    for (size_t i = static_cast<size_t>(dim) + 1; i < rank; ++i) inner *= shape[i];
    int64_t in_row = static_cast<int64_t>(shape[static_cast<size_t>(dim)]) * inner;
    int64_t out_row = static_cast<int64_t>(len) * inner;

    Shape out_shape = shape;
    out_shape[static_cast<size_t>(dim)] = len;
    Array<T> out(out_shape);
    for (int64_t o = 0; o < outer; ++o)
        std::copy_n(x.val().ptr() + o * in_row + start * inner, out_row, out.ptr() + o * out_row);
    return make_op<T>(std::move(out), {x},
                      [x, outer, inner, in_row, out_row, start](Node<T>& self) {
                          if (!x.requires_grad()) return;
                          T* g = ensure_grad(*x.node_).ptr();
                          for (int64_t o = 0; o < outer; ++o) {
                              const T* src = self.grad.ptr() + o * out_row;
                              T* dst = g + o * in_row + start * inner;
                              for (int64_t i = 0; i < out_row; ++i) dst[i] += src[i];
                          }
                      });
}

// ---- resampling ----

template <typename T>
Tensor<T> upsample_nearest2(const Tensor<T>& x) {
    require(x.shape().size() == 4, ErrorCode::invalid_shape, "upsample: expected [N,C,H,W]");
    int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    Array<T> out({N, C, 2 * H, 2 * W});
    int64_t planes = static_cast<int64_t>(N) * C;
    for (int64_t p = 0; p < planes; ++p) {
        const T* src = x.val().ptr() + p * H * W;
        T* dst = out.ptr() + p * 4 * H * W;
        for (int y = 0; y < 2 * H; ++y)
            for (int xx = 0; xx < 2 * W; ++xx)
                dst[static_cast<int64_t>(y) * 2 * W + xx] =
                    src[static_cast<int64_t>(y / 2) * W + xx / 2];
    }
    return make_op<T>(std::move(out), {x}, [x, planes, H, W](Node<T>& self) {
        if (!x.requires_grad()) return;
        T* g = ensure_grad(*x.node_).ptr();
        for (int64_t p = 0; p < planes; ++p) {
            const T* src = self.grad.ptr() + p * 4 * H * W;
            T* dst = g + p * H * W;
            for (int y = 0; y < 2 * H; ++y)
                for (int xx = 0; xx < 2 * W; ++xx)
                    dst[static_cast<int64_t>(y / 2) * W + xx / 2] +=
                        src[static_cast<int64_t>(y) * 2 * W + xx];
        }
    });
}

// Adaptive average pooling to (oh, ow); input dims must be divisible.
template <typename T>
Tensor<T> avg_pool_to(const Tensor<T>& x, int oh, int ow) {
    require(x.shape().size() == 4, ErrorCode::invalid_shape, "avg_pool_to: expected [N,C,H,W]");
    int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    require(H % oh == 0 && W % ow == 0, ErrorCode::invalid_shape,
            "avg_pool_to: dims must divide the target grid");
    int fy = H / oh, fx = W / ow;
    T inv = T(1) / static_cast<T>(fy * fx);
    Array<T> out({N, C, oh, ow});
    int64_t planes = static_cast<int64_t>(N) * C;
    for (int64_t p = 0; p < planes; ++p) {
        const T* src = x.val().ptr() + p * H * W;
        T* dst = out.ptr() + p * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx) {
                T acc = T(0);
                for (int dy = 0; dy < fy; ++dy)
                    for (int dx = 0; dx < fx; ++dx)
                        acc += src[static_cast<int64_t>(y * fy + dy) * W + (xx * fx + dx)];
                dst[static_cast<int64_t>(y) * ow + xx] = acc * inv;
            }
    }
    return make_op<T>(std::move(out), {x}, [x, planes, H, W, oh, ow, fy, fx, inv](Node<T>& self) {
        if (!x.requires_grad()) return;
        T* g = ensure_grad(*x.node_).ptr();
        for (int64_t p = 0; p < planes; ++p) {
            const T* src = self.grad.ptr() + p * oh * ow;
            T* dst = g + p * H * W;
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    T v = src[static_cast<int64_t>(y) * ow + xx] * inv;
                    for (int dy = 0; dy < fy; ++dy)
                        for (int dx = 0; dx < fx; ++dx)
                            dst[static_cast<int64_t>(y * fy + dy) * W + (xx * fx + dx)] += v;
                }
        }
    });
}

// ---- broadcast helpers ----

// x [N,C,H,W] + bias [C]
template <typename T>
Tensor<T> add_channel_bias(const Tensor<T>& x, const Tensor<T>& v) {
    require(x.shape().size() == 4 && v.shape().size() == 1 && v.shape()[0] == x.shape()[1],
            ErrorCode::invalid_shape, "add_channel_bias: shape mismatch");
    int N = x.shape()[0], C = x.shape()[1];
    int64_t hw = static_cast<int64_t>(x.shape()[2]) * x.shape()[3];
    Array<T> out(x.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const T* src = x.val().ptr() + (n * C + c) * hw;
            T* dst = out.ptr() + (n * C + c) * hw;
            T bias = v.val()[c];
            for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] + bias;
        }
    return make_op<T>(std::move(out), {x, v}, [x, v, N, C, hw](Node<T>& self) {
        if (x.requires_grad()) {
            T* g = ensure_grad(*x.node_).ptr();
            const T* s = self.grad.ptr();
            for (int64_t i = 0; i < self.grad.numel(); ++i) g[i] += s[i];
        }
        if (v.requires_grad()) {
            T* g = ensure_grad(*v.node_).ptr();
            for (int64_t n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const T* src = self.grad.ptr() + (n * C + c) * hw;
                    T acc = T(0);
                    for (int64_t i = 0; i < hw; ++i) acc += src[i];
                    g[c] += acc;
                }
        }
    });
}

// Replicates x along a new leading batch dim: [d...] -> [B, d...].
template <typename T>
Tensor<T> tile0(const Tensor<T>& x, int B) {
    Shape out_shape = x.shape();
    out_shape.insert(out_shape.begin(), B);
    Array<T> out(out_shape);
    int64_t len = x.numel();
    for (int b = 0; b < B; ++b) std::copy_n(x.val().ptr(), len, out.ptr() + b * len);
    return make_op<T>(std::move(out), {x}, [x, B, len](Node<T>& self) {
        if (!x.requires_grad()) return;
        T* g = ensure_grad(*x.node_).ptr();
        for (int b = 0; b < B; ++b) {
            const T* src = self.grad.ptr() + b * len;
            for (int64_t i = 0; i < len; ++i) g[i] += src[i];
        }
    });
}

}  // namespace recast::nn
