#include "wavpool/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wavpool {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor shape has a zero extent: " + Tensor::shape_str(shape));
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::mat(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged rows in 2D literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vec(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw IndexError("axis " + std::to_string(axis) + " out of range for rank " +
                         std::to_string(shape_.size()));
    }
    return shape_[axis];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
}
double Tensor::at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
}
double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double& Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (checked_product(new_shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_str() + " (size " +
                             std::to_string(data_.size()) + ") to " + shape_str(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
    if (rank() == 0 || begin > end || end > shape_[0]) {
        throw IndexError("row slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for shape " + shape_str());
    }
    std::size_t row_size = data_.size() / shape_[0];
    std::vector<std::size_t> out_shape = shape_;
    out_shape[0] = end - begin;
    std::vector<double> out(data_.begin() + begin * row_size, data_.begin() + end * row_size);
    return Tensor(std::move(out_shape), std::move(out));
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

std::string Tensor::shape_str() const { return shape_str(shape_); }

// ---------------------------------------------------------------------------
// SeededRng

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t SeededRng::next_u64() {
    // xoshiro256** (Blackman & Vigna, public domain reference algorithm).
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double SeededRng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

std::uint64_t SeededRng::below(std::uint64_t n) {
    if (n == 0) throw IndexError("SeededRng::below(0)");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

std::vector<std::size_t> SeededRng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

SeededRng SeededRng::derive(std::uint64_t stream) const {
    std::uint64_t x = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
    return SeededRng(splitmix64(x));
}

// ---------------------------------------------------------------------------
// Kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul requires rank-2 tensors, got " + a.shape_str() + " and " +
                             b.shape_str());
    }
    const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw DimensionError("matmul inner dimensions disagree: " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i-k-j order: the j loop runs over contiguous memory in b and out, and
    // each out element still accumulates over k in ascending order.
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

namespace {

// Bottom/right edge-replication pad until (padded - k) divides by stride.
std::size_t replicate_pad_amount(std::size_t extent, std::size_t k, std::size_t stride) {
    if (extent < k) return k - extent;
    std::size_t rem = (extent - k) % stride;
    return rem == 0 ? 0 : stride - rem;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, PaddingMode padding) {
    if (input.rank() != 2 || kernel.rank() != 2) {
        throw DimensionError("conv2d requires rank-2 input and kernel, got " + input.shape_str() +
                             " and " + kernel.shape_str());
    }
    if (stride == 0) throw DimensionError("conv2d stride must be positive");
    const std::size_t h = input.dim(0), w = input.dim(1);
    const std::size_t kh = kernel.dim(0), kw = kernel.dim(1);

    std::size_t pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
    switch (padding) {
        case PaddingMode::none:
            break;
        case PaddingMode::zero:
            pad_top = (kh - 1) / 2;
            pad_bottom = (kh - 1) - pad_top;
            pad_left = (kw - 1) / 2;
            pad_right = (kw - 1) - pad_left;
            break;
        case PaddingMode::replicate_edge:
            pad_bottom = replicate_pad_amount(h, kh, stride);
            pad_right = replicate_pad_amount(w, kw, stride);
            break;
    }
    const std::size_t ph = h + pad_top + pad_bottom;
    const std::size_t pw = w + pad_left + pad_right;
    if (kh > ph || kw > pw) {
        throw DimensionError("conv2d kernel " + kernel.shape_str() + " larger than padded input [" +
                             std::to_string(ph) + "x" + std::to_string(pw) + "]");
    }

    const std::size_t oh = (ph - kh) / stride + 1;
    const std::size_t ow = (pw - kw) / stride + 1;
    Tensor out({oh, ow});

    const bool zero_fill = (padding != PaddingMode::replicate_edge);
    auto sample = [&](std::size_t pi, std::size_t pj) -> double {
        // (pi, pj) index into padded coordinates.
        if (pi < pad_top || pj < pad_left) return 0.0;  // only possible for zero padding
        std::size_t i = pi - pad_top, j = pj - pad_left;
        if (i >= h) {
            if (zero_fill) return 0.0;
            i = h - 1;
        }
        if (j >= w) {
            if (zero_fill) return 0.0;
            j = w - 1;
        }
        return input.at(i, j);
    };

    for (std::size_t oi = 0; oi < oh; ++oi) {
        for (std::size_t oj = 0; oj < ow; ++oj) {
            double acc = 0.0;
            for (std::size_t ki = 0; ki < kh; ++ki) {
                for (std::size_t kj = 0; kj < kw; ++kj) {
                    acc += kernel.at(ki, kj) * sample(oi * stride + ki, oj * stride + kj);
                }
            }
            out.at(oi, oj) = acc;
        }
    }
    return out;
}

Tensor maxpool3d(const Tensor& input, std::size_t k1, std::size_t k2, std::size_t k3) {
    if (input.rank() != 3) {
        throw DimensionError("maxpool3d requires a rank-3 tensor, got " + input.shape_str());
    }
    const std::size_t d1 = input.dim(0), d2 = input.dim(1), d3 = input.dim(2);
    if (k1 == 0 || k2 == 0 || k3 == 0 || k1 > d1 || k2 > d2 || k3 > d3) {
        throw DimensionError("maxpool3d kernel (" + std::to_string(k1) + "," + std::to_string(k2) +
                             "," + std::to_string(k3) + ") does not fit input " + input.shape_str());
    }
    Tensor out({d1 - k1 + 1, d2 - k2 + 1, d3 - k3 + 1});
    for (std::size_t i = 0; i < d1 - k1 + 1; ++i) {
        for (std::size_t j = 0; j < d2 - k2 + 1; ++j) {
            for (std::size_t l = 0; l < d3 - k3 + 1; ++l) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < k1; ++a)
                    for (std::size_t b = 0; b < k2; ++b)
                        for (std::size_t c = 0; c < k3; ++c)
                            best = std::max(best, input.at(i + a, j + b, l + c));
                out.at(i, j, l) = best;
            }
        }
    }
    return out;
}

}  // namespace wavpool
