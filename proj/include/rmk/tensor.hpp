#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rmk/errors.hpp"

namespace rmk {

// Dense row-major tensor of doubles, rank 1..4. All hot math goes through the
// raw-pointer kernels; this class is the container plus cold-path accessors.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
        if (shape_.empty() || shape_.size() > 4)
            throw ContractError("tensor rank must be 1..4, got " + std::to_string(shape_.size()));
        std::size_t n = 1;
        for (std::size_t d : shape_) n *= d;
        data_.assign(n, 0.0);
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        t.fill(v);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.0); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

inline std::string shape_string(const Tensor& t) { return shape_string(t.shape()); }

// y += a * x
inline void axpy(double a, const Tensor& x, Tensor& y) {
    if (!x.same_shape(y)) throw ContractError("axpy: shape mismatch " + shape_string(x) + " vs " + shape_string(y));
    double* yp = y.data();
    const double* xp = x.data();
    for (std::size_t i = 0; i < x.size(); ++i) yp[i] += a * xp[i];
}

// Contiguous copy of rows [start, start+count) along the leading axis.
inline Tensor slice_batch(const Tensor& t, std::size_t start, std::size_t count) {
    if (t.rank() == 0) throw ContractError("slice_batch: rank-0 tensor");
    if (start + count > t.shape()[0])
        throw ContractError("slice_batch: rows [" + std::to_string(start) + ", " +
                            std::to_string(start + count) + ") out of range for " + shape_string(t));
    std::vector<std::size_t> shape = t.shape();
    shape[0] = count;
    Tensor out(shape);
    const std::size_t row = t.size() / t.shape()[0];
    std::copy(t.data() + start * row, t.data() + (start + count) * row, out.data());
    return out;
}

} // namespace rmk
