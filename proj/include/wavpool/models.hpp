#pragma once

// The three classifier architectures. WavPool runs a fixed (non-trainable)
// multi-resolution wavelet front end, gives each level's three detail
// orientations their own dense layer, stacks the activations into an
// L×3×N_1 volume, max-pools it in 3D, and classifies with a dense head.
// The MLP and CNN are conventional baselines built from the same layers.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "wavpool/layers.hpp"
#include "wavpool/wavelet.hpp"

namespace wavpool {

struct MicroWavConfig {
    int level = 1;                     // 1-based decomposition level
    std::size_t detail_input_size = 0; // flattened detail elements at this level
    std::size_t hidden_size = 0;       // N_l
};

struct WavPoolConfig {
    std::size_t height = 28, width = 28;
    std::size_t base_hidden = 256;  // N_1
    bool scaling = true;            // N_l = max(1, round(N_1 / l)) when on
    std::size_t pool_k1 = 2;        // pool kernel is (k1, k1, k2)
    std::size_t pool_k2 = 2;
    std::size_t num_classes = 10;
};

struct MLPConfig {
    std::size_t input_size = 784;
    std::size_t hidden1 = 256, hidden2 = 256;
    std::size_t num_classes = 10;
};

struct CNNConfig {
    std::size_t height = 28, width = 28;
    std::size_t kernel_size = 3;
    std::size_t hidden_channels_1 = 4, hidden_channels_2 = 8;
    std::size_t num_classes = 10;
};

// Hidden width per level under the inverse-level scaling rule.
std::vector<std::size_t> wavpool_hidden_sizes(std::size_t base_hidden, bool scaling,
                                              std::size_t levels);

class Model {
public:
    virtual ~Model() = default;
    // images: B×H×W for all architectures; returns B×num_classes logits.
    virtual Tensor forward(const Tensor& images, bool training) = 0;
    virtual void backward(const Tensor& dlogits) = 0;
    virtual std::vector<Param*> params() = 0;
    virtual std::vector<std::pair<std::string, Tensor*>> state() = 0;
    virtual std::string arch() const = 0;
    virtual std::size_t num_classes() const = 0;
    virtual std::vector<std::pair<std::string, std::string>> config_kv() const = 0;
};

class WavPoolModel : public Model {
public:
    WavPoolModel(const WavPoolConfig& cfg, SeededRng& rng);

    Tensor forward(const Tensor& images, bool training) override;
    void backward(const Tensor& dlogits) override;
    std::vector<Param*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override { return {}; }
    std::string arch() const override { return "wavpool"; }
    std::size_t num_classes() const override { return cfg_.num_classes; }
    std::vector<std::pair<std::string, std::string>> config_kv() const override;

    const WavPoolConfig& config() const { return cfg_; }
    std::size_t levels() const { return micro_.size(); }
    const std::vector<MicroWavConfig>& micro_configs() const { return micro_cfgs_; }
    const WaveletFilters2D& filters() const { return filters_; }
    // introspection for shape/padding tests
    const Tensor& last_stack() const { return stack_; }
    const Tensor& last_pooled() const { return pooled_; }
    std::vector<std::size_t> pooled_shape() const;

private:
    struct MicroWav {
        std::unique_ptr<Dense> dense[3];  // vertical, horizontal, diagonal
        std::unique_ptr<ReLU> relu[3];
    };

    WavPoolConfig cfg_;
    WaveletFilters2D filters_;
    std::vector<MicroWavConfig> micro_cfgs_;
    std::vector<MicroWav> micro_;
    std::unique_ptr<MaxPool3dLayer> pool_;
    std::unique_ptr<Flatten> flatten_;
    std::unique_ptr<Dense> head_;
    Tensor stack_, pooled_;
    std::vector<Tensor> detail_mats_;  // L×3 matrices, each B×detail_size
};

class MLPModel : public Model {
public:
    MLPModel(const MLPConfig& cfg, SeededRng& rng);

    Tensor forward(const Tensor& images, bool training) override;
    void backward(const Tensor& dlogits) override;
    std::vector<Param*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override { return {}; }
    std::string arch() const override { return "mlp"; }
    std::size_t num_classes() const override { return cfg_.num_classes; }
    std::vector<std::pair<std::string, std::string>> config_kv() const override;

    const MLPConfig& config() const { return cfg_; }

private:
    MLPConfig cfg_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

class CNNModel : public Model {
public:
    CNNModel(const CNNConfig& cfg, SeededRng& rng);

    Tensor forward(const Tensor& images, bool training) override;
    void backward(const Tensor& dlogits) override;
    std::vector<Param*> params() override;
    std::vector<std::pair<std::string, Tensor*>> state() override;
    std::string arch() const override { return "cnn"; }
    std::size_t num_classes() const override { return cfg_.num_classes; }
    std::vector<std::pair<std::string, std::string>> config_kv() const override;

    const CNNConfig& config() const { return cfg_; }

private:
    CNNConfig cfg_;
    std::vector<std::unique_ptr<Layer>> layers_;
};

std::unique_ptr<WavPoolModel> build_wavpool(const WavPoolConfig& cfg, SeededRng& rng);
std::unique_ptr<MLPModel> build_mlp(const MLPConfig& cfg, SeededRng& rng);
std::unique_ptr<CNNModel> build_cnn(const CNNConfig& cfg, SeededRng& rng);

}  // namespace wavpool
