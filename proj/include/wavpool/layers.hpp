#pragma once

// Minimal differentiable layers with explicit forward/backward passes.
// Every trainable value lives in a Param; a Layer caches whatever it needs
// from forward so that backward can produce input gradients and accumulate
// parameter gradients. No computation graph: composition order is the
// caller's responsibility.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "wavpool/errors.hpp"
#include "wavpool/tensor.hpp"

namespace wavpool {

struct Param {
    Tensor value;
    Tensor grad;
    std::string name;

    Param() = default;
    Param(Tensor v, std::string n)
        : value(std::move(v)), grad(Tensor::zeros(value.shape())), name(std::move(n)) {}

    void zero_grad() { grad.fill(0.0); }
};

class Layer {
public:
    virtual ~Layer() = default;

    Tensor forward(const Tensor& x, bool training) {
        Tensor y = do_forward(x, training);
        forward_done_ = true;
        return y;
    }

    Tensor backward(const Tensor& grad_out) {
        if (!forward_done_)
            throw ProtocolError("backward called before forward on layer '" + name_ + "'");
        return do_backward(grad_out);
    }

    virtual std::vector<Param*> params() { return {}; }
    // Non-trainable tensors that still belong in a checkpoint (e.g. batchnorm
    // running statistics), keyed by a stable name.
    virtual std::vector<std::pair<std::string, Tensor*>> state() { return {}; }
    const std::string& name() const { return name_; }

protected:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual Tensor do_forward(const Tensor& x, bool training) = 0;
    virtual Tensor do_backward(const Tensor& grad_out) = 0;

    std::string name_;
    bool forward_done_ = false;
};

// y = x·W + b for a batch of row vectors. W is in×out so that fan-in is the
// first dimension; weights are drawn uniform in ±sqrt(1/fan_in), biases zero.
class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out, SeededRng& rng, const std::string& name);

    std::vector<Param*> params() override { return {&W_, &b_}; }
    std::size_t in_size() const { return in_; }
    std::size_t out_size() const { return out_; }

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    std::size_t in_, out_;
    Param W_, b_;
    Tensor x_cache_;
};

class ReLU : public Layer {
public:
    explicit ReLU(const std::string& name = "relu") : Layer(name) {}

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    Tensor x_cache_;
};

// Multi-channel 2D cross-correlation over batches shaped B×C×H×W.
// Supports stride ≥ 1; PaddingMode::zero pads symmetrically ((k−1)/2 before)
// so stride-1 output preserves H×W.
class Conv2dLayer : public Layer {
public:
    Conv2dLayer(std::size_t c_in, std::size_t c_out, std::size_t kernel, std::size_t stride,
                PaddingMode padding, SeededRng& rng, const std::string& name);

    std::vector<Param*> params() override { return {&ker_, &b_}; }

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    std::size_t c_in_, c_out_, k_, stride_;
    PaddingMode padding_;
    Param ker_;  // c_out × c_in × k × k
    Param b_;    // c_out
    Tensor padded_cache_;  // B × C_in × Hp × Wp
    std::size_t pad_top_ = 0, pad_left_ = 0, in_h_ = 0, in_w_ = 0;
};

// Per-channel standardization over (batch, height, width) with learned
// scale/shift. Training mode uses batch statistics (biased variance) and
// updates running statistics; eval mode uses the running values.
class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::size_t channels, const std::string& name, double eps = 1e-5,
                double momentum = 0.1);

    std::vector<Param*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor*>> state() override {
        return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
    }

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    std::size_t channels_;
    double eps_, momentum_;
    Param gamma_, beta_;
    Tensor running_mean_, running_var_;
    // caches from the last forward
    Tensor xhat_cache_;
    Tensor inv_std_cache_;  // per channel
    Tensor centered_cache_;
    bool trained_forward_ = false;
};

// Sliding-window max over the last three dims of a B×D1×D2×D3 tensor,
// stride 1. Gradient flows only to each window's argmax; ties break to the
// first position in row-major order.
class MaxPool3dLayer : public Layer {
public:
    MaxPool3dLayer(std::size_t k1, std::size_t k2, std::size_t k3, const std::string& name);

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    std::size_t k1_, k2_, k3_;
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> argmax_;  // flat input index per output cell
};

// B×… → B×features
class Flatten : public Layer {
public:
    explicit Flatten(const std::string& name = "flatten") : Layer(name) {}

protected:
    Tensor do_forward(const Tensor& x, bool training) override;
    Tensor do_backward(const Tensor& grad_out) override;

private:
    std::vector<std::size_t> in_shape_;
};

// Fused softmax + mean cross-entropy with log-sum-exp stabilization.
struct XentResult {
    double loss;
    Tensor dlogits;  // (softmax − onehot)/batch
    Tensor probs;    // batch × K softmax scores (used for ROC AUC)
};
XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels);

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
    static Kind parse_kind(const std::string& s);
    std::string kind_name() const { return kind == Kind::sgd ? "sgd" : "adam"; }
};

// Applies updates in-place and zeroes gradients afterwards. Adam keeps
// per-parameter moment state keyed by position in the params vector, so the
// same optimizer instance must always see the same parameter list.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg);
    void step(const std::vector<Param*>& params);
    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

std::size_t param_count(const std::vector<Param*>& params);

}  // namespace wavpool
