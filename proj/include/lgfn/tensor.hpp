#pragma once

#include "lgfn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace lgfn {

using Index = std::int64_t;
using Shape = std::vector<Index>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

inline Index shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
}

inline void check_shape(const Shape& s) {
    if (s.empty()) throw ShapeError("tensor rank must be >= 1");
    for (Index e : s)
        if (e < 1) throw ShapeError("tensor extents must be >= 1, got " + shape_str(s));
}

// Dense row-major array. T = float is compute grade, T = double is
// verification grade.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
        check_shape(shape_);
        data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape(shape_);
        if (static_cast<Index>(data_.size()) != shape_numel(shape_))
            throw ShapeError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    template <typename Rng>
    static Tensor uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = static_cast<T>(lo + (hi - lo) * unit_uniform(rng));
        return t;
    }

    const Shape& shape() const { return shape_; }
    Index rank() const { return static_cast<Index>(shape_.size()); }
    Index dim(Index i) const {
        if (i < 0) i += rank();
        if (i < 0 || i >= rank()) throw ShapeError("dimension index out of range");
        return shape_[static_cast<std::size_t>(i)];
    }
    Index numel() const { return static_cast<Index>(data_.size()); }
    bool empty() const { return data_.empty(); }

    std::span<T> span() { return data_; }
    std::span<const T> span() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

    Index offset(std::initializer_list<Index> idx) const {
        if (static_cast<Index>(idx.size()) != rank())
            throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
        Index off = 0;
        std::size_t d = 0;
        for (Index i : idx) {
            if (i < 0 || i >= shape_[d]) throw BoundsError("index out of range for shape " + shape_str(shape_));
            off = off * shape_[d] + i;
            ++d;
        }
        return off;
    }
    T& at(std::initializer_list<Index> idx) { return data_[static_cast<std::size_t>(offset(idx))]; }
    const T& at(std::initializer_list<Index> idx) const { return data_[static_cast<std::size_t>(offset(idx))]; }

    Tensor reshaped(Shape shape) const {
        check_shape(shape);
        if (shape_numel(shape) != numel())
            throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
        return Tensor(std::move(shape), data_);
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

    // Bitwise equality (distinguishes +0/-0 and compares NaN payloads).
    bool bit_equal(const Tensor& o) const {
        if (shape_ != o.shape_) return false;
        return std::equal(data_.begin(), data_.end(), o.data_.begin(), [](T a, T b) {
            return std::memcmp(&a, &b, sizeof(T)) == 0;
        });
    }

    // 53-bit uniform in [0,1); independent of the standard library's
    // distribution implementations so seeds reproduce across toolchains.
    template <typename Rng>
    static double unit_uniform(Rng& rng) {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0;
    for (Index i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
    return m;
}

// max |a-b| / max(|a|,|b|,floor) elementwise.
template <typename T>
double max_rel_diff(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-12) {
    require_same_shape(a, b, "max_rel_diff");
    double m = 0;
    for (Index i = 0; i < a.numel(); ++i) {
        const double x = a[i], y = b[i];
        m = std::max(m, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
    }
    return m;
}

} // namespace lgfn
