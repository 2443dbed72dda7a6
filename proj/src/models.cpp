#include "wavpool/models.hpp"

#include <cmath>
#include <cstring>

namespace wavpool {

std::vector<std::size_t> wavpool_hidden_sizes(std::size_t base_hidden, bool scaling,
                                              std::size_t levels) {
    std::vector<std::size_t> sizes(levels);
    for (std::size_t l = 1; l <= levels; ++l) {
        if (scaling) {
            const double n = static_cast<double>(base_hidden) / static_cast<double>(l);
            sizes[l - 1] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n + 0.5)));
        } else {
            sizes[l - 1] = base_hidden;
        }
    }
    return sizes;
}

// -------------------------------------------------------------- WavPool

WavPoolModel::WavPoolModel(const WavPoolConfig& cfg, SeededRng& rng)
    : cfg_(cfg), filters_(haar_filters_2d()) {
    if (cfg.num_classes < 2) throw ConfigError("wavpool needs at least 2 classes");
    if (cfg.base_hidden == 0) throw ConfigError("wavpool base hidden size must be positive");
    const std::size_t levels =
        static_cast<std::size_t>(level_count(cfg.height, cfg.width, filters_.vanishing_moments));

    if (cfg.pool_k1 > std::min<std::size_t>(levels, 3) || cfg.pool_k1 == 0)
        throw ConfigError("pool kernel k1=" + std::to_string(cfg.pool_k1) +
                          " must lie in [1, min(L, 3)] with L=" + std::to_string(levels));
    if (cfg.pool_k2 > cfg.base_hidden || cfg.pool_k2 == 0)
        throw ConfigError("pool kernel k2=" + std::to_string(cfg.pool_k2) +
                          " must lie in [1, N1=" + std::to_string(cfg.base_hidden) + "]");

    // Probe decomposition of a blank image fixes the per-level detail sizes,
    // including any replicate-padding the real data will see.
    auto probe = decompose(Tensor::zeros({cfg.height, cfg.width}), filters_);
    auto hidden = wavpool_hidden_sizes(cfg.base_hidden, cfg.scaling, levels);

    static const char* suffix[3] = {"v", "h", "d"};
    for (std::size_t l = 0; l < levels; ++l) {
        MicroWavConfig mc;
        mc.level = static_cast<int>(l + 1);
        mc.detail_input_size = probe.levels[l].v.size();
        mc.hidden_size = hidden[l];
        micro_cfgs_.push_back(mc);

        MicroWav mw;
        for (int o = 0; o < 3; ++o) {
            const std::string name = "micro" + std::to_string(l + 1) + "." + suffix[o];
            mw.dense[o] =
                std::make_unique<Dense>(mc.detail_input_size, mc.hidden_size, rng, name);
            mw.relu[o] = std::make_unique<ReLU>(name + ".relu");
        }
        micro_.push_back(std::move(mw));
    }

    pool_ = std::make_unique<MaxPool3dLayer>(cfg.pool_k1, cfg.pool_k1, cfg.pool_k2, "pool");
    flatten_ = std::make_unique<Flatten>("flatten");
    auto ps = pooled_shape();
    head_ = std::make_unique<Dense>(ps[0] * ps[1] * ps[2], cfg.num_classes, rng, "head");
}

std::vector<std::size_t> WavPoolModel::pooled_shape() const {
    const std::size_t L = micro_.size();
    return {L - cfg_.pool_k1 + 1, 4 - cfg_.pool_k1, cfg_.base_hidden - cfg_.pool_k2 + 1};
}

Tensor WavPoolModel::forward(const Tensor& images, bool training) {
    if (images.rank() != 3 || images.dim(1) != cfg_.height || images.dim(2) != cfg_.width)
        throw DimensionError("wavpool expects a B x " + std::to_string(cfg_.height) + " x " +
                             std::to_string(cfg_.width) + " batch, got " + images.shape_str());
    const std::size_t batch = images.dim(0);
    const std::size_t L = micro_.size(), n1 = cfg_.base_hidden;

    detail_mats_.assign(L * 3, Tensor());
    for (std::size_t l = 0; l < L; ++l)
        for (int o = 0; o < 3; ++o)
            detail_mats_[l * 3 + o] = Tensor({batch, micro_cfgs_[l].detail_input_size});

    for (std::size_t b = 0; b < batch; ++b) {
        Tensor img = images.slice_rows(b, b + 1).reshaped({cfg_.height, cfg_.width});
        auto mrd = decompose(img, filters_);
        for (std::size_t l = 0; l < L; ++l) {
            const Tensor* views[3] = {&mrd.levels[l].v, &mrd.levels[l].h, &mrd.levels[l].d};
            for (int o = 0; o < 3; ++o) {
                const std::size_t n = views[o]->size();
                std::memcpy(detail_mats_[l * 3 + o].data() + b * n, views[o]->data(),
                            n * sizeof(double));
            }
        }
    }

    stack_ = Tensor::zeros({batch, L, 3, n1});
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t nl = micro_cfgs_[l].hidden_size;
        for (int o = 0; o < 3; ++o) {
            Tensor a = micro_[l].dense[o]->forward(detail_mats_[l * 3 + o], training);
            a = micro_[l].relu[o]->forward(a, training);
            for (std::size_t b = 0; b < batch; ++b)
                std::memcpy(stack_.data() + ((b * L + l) * 3 + o) * n1, a.data() + b * nl,
                            nl * sizeof(double));
        }
    }

    pooled_ = pool_->forward(stack_, training);
    Tensor flat = flatten_->forward(pooled_, training);
    return head_->forward(flat, training);
}

void WavPoolModel::backward(const Tensor& dlogits) {
    Tensor g = head_->backward(dlogits);
    g = flatten_->backward(g);
    g = pool_->backward(g);  // B×L×3×N1
    const std::size_t batch = g.dim(0), L = micro_.size(), n1 = cfg_.base_hidden;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t nl = micro_cfgs_[l].hidden_size;
        for (int o = 0; o < 3; ++o) {
            Tensor ga({batch, nl});
            for (std::size_t b = 0; b < batch; ++b)
                std::memcpy(ga.data() + b * nl, g.data() + ((b * L + l) * 3 + o) * n1,
                            nl * sizeof(double));
            ga = micro_[l].relu[o]->backward(ga);
            (void)micro_[l].dense[o]->backward(ga);
            // input gradients stop here: the wavelet front end is fixed
        }
    }
}

std::vector<Param*> WavPoolModel::params() {
    std::vector<Param*> ps;
    for (auto& mw : micro_)
        for (int o = 0; o < 3; ++o)
            for (Param* p : mw.dense[o]->params()) ps.push_back(p);
    for (Param* p : head_->params()) ps.push_back(p);
    return ps;
}

std::vector<std::pair<std::string, std::string>> WavPoolModel::config_kv() const {
    return {{"arch", "wavpool"},
            {"height", std::to_string(cfg_.height)},
            {"width", std::to_string(cfg_.width)},
            {"base_hidden", std::to_string(cfg_.base_hidden)},
            {"scaling", cfg_.scaling ? "true" : "false"},
            {"pool_k1", std::to_string(cfg_.pool_k1)},
            {"pool_k2", std::to_string(cfg_.pool_k2)},
            {"num_classes", std::to_string(cfg_.num_classes)}};
}

// ------------------------------------------------------------------ MLP

MLPModel::MLPModel(const MLPConfig& cfg, SeededRng& rng) : cfg_(cfg) {
    if (cfg.input_size == 0 || cfg.hidden1 == 0 || cfg.hidden2 == 0 || cfg.num_classes < 2)
        throw ConfigError("mlp sizes must be positive (and at least 2 classes)");
    layers_.push_back(std::make_unique<Flatten>("flatten"));
    layers_.push_back(std::make_unique<Dense>(cfg.input_size, cfg.hidden1, rng, "fc1"));
    layers_.push_back(std::make_unique<ReLU>("relu1"));
    layers_.push_back(std::make_unique<Dense>(cfg.hidden1, cfg.hidden2, rng, "fc2"));
    layers_.push_back(std::make_unique<ReLU>("relu2"));
    layers_.push_back(std::make_unique<Dense>(cfg.hidden2, cfg.num_classes, rng, "head"));
}

Tensor MLPModel::forward(const Tensor& images, bool training) {
    if (images.rank() != 3)
        throw DimensionError("mlp expects a B x H x W batch, got " + images.shape_str());
    if (images.dim(1) * images.dim(2) != cfg_.input_size)
        throw DimensionError("mlp configured for " + std::to_string(cfg_.input_size) +
                             " inputs, got " + images.shape_str());
    Tensor x = images;
    for (auto& l : layers_) x = l->forward(x, training);
    return x;
}

void MLPModel::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Param*> MLPModel::params() {
    std::vector<Param*> ps;
    for (auto& l : layers_)
        for (Param* p : l->params()) ps.push_back(p);
    return ps;
}

std::vector<std::pair<std::string, std::string>> MLPModel::config_kv() const {
    return {{"arch", "mlp"},
            {"input_size", std::to_string(cfg_.input_size)},
            {"hidden1", std::to_string(cfg_.hidden1)},
            {"hidden2", std::to_string(cfg_.hidden2)},
            {"num_classes", std::to_string(cfg_.num_classes)}};
}

// ------------------------------------------------------------------ CNN

CNNModel::CNNModel(const CNNConfig& cfg, SeededRng& rng) : cfg_(cfg) {
    if (cfg.kernel_size < 2 || cfg.kernel_size > 4)
        throw ConfigError("cnn kernel size must lie in [2, 4], got " +
                          std::to_string(cfg.kernel_size));
    if (cfg.hidden_channels_1 < 1 || cfg.hidden_channels_1 > 20 || cfg.hidden_channels_2 < 1 ||
        cfg.hidden_channels_2 > 20)
        throw ConfigError("cnn channel counts must lie in [1, 20]");
    layers_.push_back(std::make_unique<Conv2dLayer>(1, cfg.hidden_channels_1, cfg.kernel_size, 1,
                                                    PaddingMode::zero, rng, "conv1"));
    layers_.push_back(std::make_unique<BatchNorm2d>(cfg.hidden_channels_1, "bn1"));
    layers_.push_back(std::make_unique<ReLU>("relu1"));
    layers_.push_back(std::make_unique<Conv2dLayer>(cfg.hidden_channels_1, cfg.hidden_channels_2,
                                                    cfg.kernel_size, 1, PaddingMode::zero, rng,
                                                    "conv2"));
    layers_.push_back(std::make_unique<BatchNorm2d>(cfg.hidden_channels_2, "bn2"));
    layers_.push_back(std::make_unique<ReLU>("relu2"));
    layers_.push_back(std::make_unique<Flatten>("flatten"));
    layers_.push_back(std::make_unique<Dense>(cfg.hidden_channels_2 * cfg.height * cfg.width,
                                              cfg.num_classes, rng, "head"));
}

Tensor CNNModel::forward(const Tensor& images, bool training) {
    if (images.rank() != 3 || images.dim(1) != cfg_.height || images.dim(2) != cfg_.width)
        throw DimensionError("cnn expects a B x " + std::to_string(cfg_.height) + " x " +
                             std::to_string(cfg_.width) + " batch, got " + images.shape_str());
    Tensor x = images.reshaped({images.dim(0), 1, cfg_.height, cfg_.width});
    for (auto& l : layers_) x = l->forward(x, training);
    return x;
}

void CNNModel::backward(const Tensor& dlogits) {
    Tensor g = dlogits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

std::vector<Param*> CNNModel::params() {
    std::vector<Param*> ps;
    for (auto& l : layers_)
        for (Param* p : l->params()) ps.push_back(p);
    return ps;
}

std::vector<std::pair<std::string, Tensor*>> CNNModel::state() {
    std::vector<std::pair<std::string, Tensor*>> st;
    for (auto& l : layers_)
        for (auto& kv : l->state()) st.push_back(kv);
    return st;
}

std::vector<std::pair<std::string, std::string>> CNNModel::config_kv() const {
    return {{"arch", "cnn"},
            {"height", std::to_string(cfg_.height)},
            {"width", std::to_string(cfg_.width)},
            {"kernel_size", std::to_string(cfg_.kernel_size)},
            {"hidden_channels_1", std::to_string(cfg_.hidden_channels_1)},
            {"hidden_channels_2", std::to_string(cfg_.hidden_channels_2)},
            {"num_classes", std::to_string(cfg_.num_classes)}};
}

std::unique_ptr<WavPoolModel> build_wavpool(const WavPoolConfig& cfg, SeededRng& rng) {
    return std::make_unique<WavPoolModel>(cfg, rng);
}
std::unique_ptr<MLPModel> build_mlp(const MLPConfig& cfg, SeededRng& rng) {
    return std::make_unique<MLPModel>(cfg, rng);
}
std::unique_ptr<CNNModel> build_cnn(const CNNConfig& cfg, SeededRng& rng) {
    return std::make_unique<CNNModel>(cfg, rng);
}

}  // namespace wavpool
