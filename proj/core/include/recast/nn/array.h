#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "recast/error.h"

namespace recast::nn {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major n-d array.
template <typename T>
struct Array {
    Shape shape;
    std::vector<T> data;

    Array() = default;
    explicit Array(Shape s, T fill = T(0))
        : shape(std::move(s)), data(static_cast<size_t>(shape_numel(shape)), fill) {
        for (int d : shape)
            require(d > 0, ErrorCode::invalid_shape, "Array: nonpositive dim in " + shape_str(shape));
    }
    Array(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        require(static_cast<int64_t>(data.size()) == shape_numel(shape), ErrorCode::invalid_shape,
                "Array: data size does not match shape " + shape_str(shape));
    }

    static Array zeros(Shape s) { return Array(std::move(s)); }
    static Array full(Shape s, T v) { return Array(std::move(s), v); }

    bool empty() const { return data.empty(); }
    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i < 0 ? rank() + i : i)]; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // [N, C, H, W] accessor
    T& at4(int n, int c, int y, int x) {
        return data[((static_cast<int64_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    const T& at4(int n, int c, int y, int x) const {
        return data[((static_cast<int64_t>(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    T& at3(int a, int b, int c) {
        return data[(static_cast<int64_t>(a) * shape[1] + b) * shape[2] + c];
    }
    const T& at3(int a, int b, int c) const {
        return data[(static_cast<int64_t>(a) * shape[1] + b) * shape[2] + c];
    }
    T& at2(int a, int b) { return data[static_cast<int64_t>(a) * shape[1] + b]; }
    const T& at2(int a, int b) const { return data[static_cast<int64_t>(a) * shape[1] + b]; }

    template <typename U>
    Array<U> cast() const {
        Array<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
bool same_shape(const Array<T>& a, const Array<T>& b) {
    return a.shape == b.shape;
}

template <typename T>
void check_same_shape(const Array<T>& a, const Array<T>& b, const char* what) {
    require(same_shape(a, b), ErrorCode::invalid_shape,
            std::string(what) + ": shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
}

}  // namespace recast::nn
