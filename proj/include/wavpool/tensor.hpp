#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "wavpool/errors.hpp"

namespace wavpool {

// Dense n-dimensional array of float64 in row-major order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor zeros(std::vector<std::size_t> shape);
    // Row-major 2D literal, e.g. Tensor::mat({{1, 2}, {3, 4}}).
    static Tensor mat(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vec(std::initializer_list<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j, std::size_t k);
    double at(std::size_t i, std::size_t j, std::size_t k) const;
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l);
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

    // Same data, new shape; element counts must agree.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;
    // Copy of rows [begin, end) of a rank >= 1 tensor along axis 0.
    Tensor slice_rows(std::size_t begin, std::size_t end) const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const;
    static std::string shape_str(const std::vector<std::size_t>& shape);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Deterministic, portable PRNG: xoshiro256** seeded through splitmix64.
// Identical seeds produce identical sequences on every platform; no
// standard-library distributions are used anywhere (their outputs are
// implementation-defined).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    // Uniform on [0, 1): top 53 bits of next_u64 scaled by 2^-53.
    double uniform01();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Unbiased uniform integer in [0, n); rejection sampling on next_u64.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates using below(); permutes indices 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Independent deterministic sub-stream k of this seed.
    SeededRng derive(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
};

// a [m x k] times b [k x n] -> [m x n]. Fixed ascending-k accumulation
// order per output element.
Tensor matmul(const Tensor& a, const Tensor& b);

enum class PaddingMode {
    none,
    // Zero-pad by (k-1) total per axis, split (k-1)/2 before / rest after;
    // with stride 1 the output keeps the input's spatial dims.
    zero,
    // Replicate the last row/column until (padded - k) is a multiple of
    // stride; used to make odd extents even before a stride-2 transform.
    replicate_edge,
};

// Valid cross-correlation (no kernel flip) of a 2D input after applying
// the padding mode. Output dims: floor((padded - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
              PaddingMode padding);

// Stride-1 max pooling over a rank-3 tensor; output dim_i = d_i - k_i + 1.
Tensor maxpool3d(const Tensor& input, std::size_t k1, std::size_t k2, std::size_t k3);

}  // namespace wavpool
