#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lforge/error.hpp"

namespace lforge {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

/// Dense row-major tensor. Every dimension is positive and every value finite.
///
/// The scalar type is the precision switch: `Tensor` (64-bit) is the default
/// used throughout the model, `TensorF` (32-bit) is available for storage.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_size(shape_), T(0));
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != shape_size(shape_))
            throw ContractError("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
        if (!all_finite()) throw ContractError("tensor constructed with non-finite value");
    }

    BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
        validate_shape();
        if (!std::isfinite(fill)) throw ContractError("tensor constructed with non-finite value");
        data_.assign(shape_size(shape_), fill);
    }

    static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    T& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    /// Throws if any value is NaN or infinite. Called after every op in debug builds.
    const BasicTensor& check_finite(const char* op) const {
        if (!all_finite()) throw RuntimeError(std::string("non-finite value produced by ") + op);
        return *this;
    }

    BasicTensor reshaped(Shape shape) const {
        if (shape_size(shape) != data_.size())
            throw ContractError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        BasicTensor out;
        out.shape_ = std::move(shape);
        out.validate_shape();
        out.data_ = data_;
        return out;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    BasicTensor<U> cast() const {
        std::vector<U> d(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(d));
    }

    friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    void validate_shape() const {
        if (shape_.empty()) throw ContractError("tensor shape must have at least one dimension");
        for (std::size_t d : shape_)
            if (d == 0) throw ContractError("tensor dimension must be positive, got shape " + shape_string(shape_));
    }

    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

#ifdef NDEBUG
#define LFORGE_DEBUG_FINITE(t, op) ((void)0)
#else
#define LFORGE_DEBUG_FINITE(t, op) (t).check_finite(op)
#endif

template <typename T>
T max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require(a.shape() == b.shape(), "max_abs_diff: shape mismatch " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
    T m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Trainable tensor with an accumulated gradient of the same shape.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
    std::size_t size() const { return value.size(); }
};

}  // namespace lforge
