#include "wavpool/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace wavpool {

namespace {

Tensor transpose2d(const Tensor& a) {
    const std::size_t r = a.dim(0), c = a.dim(1);
    Tensor t({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) t[j * r + i] = a[i * c + j];
    return t;
}

void require_rank(const Tensor& x, std::size_t rank, const std::string& who) {
    if (x.rank() != rank)
        throw DimensionError(who + " expects a rank-" + std::to_string(rank) +
                             " input, got shape " + x.shape_str());
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in, std::size_t out, SeededRng& rng, const std::string& name)
    : Layer(name), in_(in), out_(out) {
    if (in == 0 || out == 0)
        throw ConfigError("dense layer '" + name + "' needs positive sizes, got " +
                          std::to_string(in) + "->" + std::to_string(out));
    Tensor w({in, out});
    const double bound = std::sqrt(1.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    W_ = Param(std::move(w), name + ".W");
    b_ = Param(Tensor::zeros({out}), name + ".b");
}

Tensor Dense::do_forward(const Tensor& x, bool) {
    require_rank(x, 2, "dense '" + name_ + "'");
    if (x.dim(1) != in_)
        throw DimensionError("dense '" + name_ + "' expects width " + std::to_string(in_) +
                             ", got " + x.shape_str());
    x_cache_ = x;
    Tensor y = matmul(x, W_.value);
    const std::size_t batch = y.dim(0);
    for (std::size_t r = 0; r < batch; ++r) {
        double* row = y.data() + r * out_;
        const double* bias = b_.value.data();
        for (std::size_t c = 0; c < out_; ++c) row[c] += bias[c];
    }
    return y;
}

Tensor Dense::do_backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(Tensor::zeros({x_cache_.dim(0), out_})))
        throw DimensionError("dense '" + name_ + "' backward got gradient shape " +
                             grad_out.shape_str());
    Tensor dW = matmul(transpose2d(x_cache_), grad_out);
    for (std::size_t i = 0; i < dW.size(); ++i) W_.grad[i] += dW[i];
    const std::size_t batch = grad_out.dim(0);
    for (std::size_t r = 0; r < batch; ++r) {
        const double* row = grad_out.data() + r * out_;
        for (std::size_t c = 0; c < out_; ++c) b_.grad[c] += row[c];
    }
    return matmul(grad_out, transpose2d(W_.value));
}

// ----------------------------------------------------------------- ReLU

Tensor ReLU::do_forward(const Tensor& x, bool) {
    x_cache_ = x;
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0.0) y[i] = 0.0;
    return y;
}

Tensor ReLU::do_backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(x_cache_))
        throw DimensionError("relu backward gradient shape " + grad_out.shape_str() +
                             " does not match input " + x_cache_.shape_str());
    Tensor g = grad_out;
    // subgradient 0 at exactly 0
    for (std::size_t i = 0; i < g.size(); ++i)
        if (x_cache_[i] <= 0.0) g[i] = 0.0;
    return g;
}

// ----------------------------------------------------------------- Conv

Conv2dLayer::Conv2dLayer(std::size_t c_in, std::size_t c_out, std::size_t kernel,
                         std::size_t stride, PaddingMode padding, SeededRng& rng,
                         const std::string& name)
    : Layer(name), c_in_(c_in), c_out_(c_out), k_(kernel), stride_(stride), padding_(padding) {
    if (c_in == 0 || c_out == 0 || kernel == 0 || stride == 0)
        throw ConfigError("conv layer '" + name + "' needs positive channel/kernel/stride values");
    Tensor w({c_out, c_in, kernel, kernel});
    const double bound = std::sqrt(1.0 / static_cast<double>(c_in * kernel * kernel));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    ker_ = Param(std::move(w), name + ".W");
    b_ = Param(Tensor::zeros({c_out}), name + ".b");
}

Tensor Conv2dLayer::do_forward(const Tensor& x, bool) {
    require_rank(x, 4, "conv '" + name_ + "'");
    if (x.dim(1) != c_in_)
        throw DimensionError("conv '" + name_ + "' expects " + std::to_string(c_in_) +
                             " input channels, got shape " + x.shape_str());
    const std::size_t batch = x.dim(0);
    in_h_ = x.dim(2);
    in_w_ = x.dim(3);

    std::size_t pt = 0, pb = 0, pl = 0, pr = 0;
    if (padding_ != PaddingMode::none) {
        pt = (k_ - 1) / 2;
        pb = k_ - 1 - pt;
        pl = pt;
        pr = pb;
    }
    const std::size_t hp = in_h_ + pt + pb, wp = in_w_ + pl + pr;
    if (hp < k_ || wp < k_)
        throw DimensionError("conv '" + name_ + "' kernel " + std::to_string(k_) +
                             " exceeds padded input " + std::to_string(hp) + "x" +
                             std::to_string(wp));
    pad_top_ = pt;
    pad_left_ = pl;

    padded_cache_ = Tensor::zeros({batch, c_in_, hp, wp});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < c_in_; ++c) {
            const double* src = x.data() + (b * c_in_ + c) * in_h_ * in_w_;
            double* dst = padded_cache_.data() + (b * c_in_ + c) * hp * wp;
            for (std::size_t i = 0; i < hp; ++i)
                for (std::size_t j = 0; j < wp; ++j) {
                    if (padding_ == PaddingMode::replicate_edge) {
                        const std::size_t si =
                            std::clamp<long>(static_cast<long>(i) - static_cast<long>(pt), 0,
                                             static_cast<long>(in_h_) - 1);
                        const std::size_t sj =
                            std::clamp<long>(static_cast<long>(j) - static_cast<long>(pl), 0,
                                             static_cast<long>(in_w_) - 1);
                        dst[i * wp + j] = src[si * in_w_ + sj];
                    } else if (i >= pt && i < pt + in_h_ && j >= pl && j < pl + in_w_) {
                        dst[i * wp + j] = src[(i - pt) * in_w_ + (j - pl)];
                    }
                }
        }

    const std::size_t oh = (hp - k_) / stride_ + 1, ow = (wp - k_) / stride_ + 1;
    Tensor out({batch, c_out_, oh, ow});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t co = 0; co < c_out_; ++co) {
            double* o = out.data() + (b * c_out_ + co) * oh * ow;
            const double bias = b_.value[co];
            for (std::size_t i = 0; i < oh * ow; ++i) o[i] = bias;
            for (std::size_t ci = 0; ci < c_in_; ++ci) {
                const double* p = padded_cache_.data() + (b * c_in_ + ci) * hp * wp;
                const double* w = ker_.value.data() + (co * c_in_ + ci) * k_ * k_;
                for (std::size_t u = 0; u < k_; ++u)
                    for (std::size_t v = 0; v < k_; ++v) {
                        const double wv = w[u * k_ + v];
                        for (std::size_t i = 0; i < oh; ++i) {
                            const double* prow = p + (i * stride_ + u) * wp + v;
                            double* orow = o + i * ow;
                            for (std::size_t j = 0; j < ow; ++j)
                                orow[j] += wv * prow[j * stride_];
                        }
                    }
            }
        }
    return out;
}

Tensor Conv2dLayer::do_backward(const Tensor& grad_out) {
    require_rank(grad_out, 4, "conv '" + name_ + "' backward");
    const std::size_t batch = padded_cache_.dim(0);
    const std::size_t hp = padded_cache_.dim(2), wp = padded_cache_.dim(3);
    const std::size_t oh = grad_out.dim(2), ow = grad_out.dim(3);
    if (grad_out.dim(0) != batch || grad_out.dim(1) != c_out_)
        throw DimensionError("conv '" + name_ + "' backward got gradient shape " +
                             grad_out.shape_str());

    Tensor dpad = Tensor::zeros(padded_cache_.shape());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t co = 0; co < c_out_; ++co) {
            const double* g = grad_out.data() + (b * c_out_ + co) * oh * ow;
            double gsum = 0;
            for (std::size_t i = 0; i < oh * ow; ++i) gsum += g[i];
            b_.grad[co] += gsum;
            for (std::size_t ci = 0; ci < c_in_; ++ci) {
                const double* p = padded_cache_.data() + (b * c_in_ + ci) * hp * wp;
                double* dp = dpad.data() + (b * c_in_ + ci) * hp * wp;
                const double* w = ker_.value.data() + (co * c_in_ + ci) * k_ * k_;
                double* dw = ker_.grad.data() + (co * c_in_ + ci) * k_ * k_;
                for (std::size_t u = 0; u < k_; ++u)
                    for (std::size_t v = 0; v < k_; ++v) {
                        const double wv = w[u * k_ + v];
                        double acc = 0;
                        for (std::size_t i = 0; i < oh; ++i) {
                            const double* prow = p + (i * stride_ + u) * wp + v;
                            double* dprow = dp + (i * stride_ + u) * wp + v;
                            const double* grow = g + i * ow;
                            for (std::size_t j = 0; j < ow; ++j) {
                                acc += grow[j] * prow[j * stride_];
                                dprow[j * stride_] += grow[j] * wv;
                            }
                        }
                        dw[u * k_ + v] += acc;
                    }
            }
        }

    // Fold padded-cell gradients back onto their source pixels.
    Tensor din = Tensor::zeros({batch, c_in_, in_h_, in_w_});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < c_in_; ++c) {
            const double* dp = dpad.data() + (b * c_in_ + c) * hp * wp;
            double* d = din.data() + (b * c_in_ + c) * in_h_ * in_w_;
            for (std::size_t i = 0; i < hp; ++i)
                for (std::size_t j = 0; j < wp; ++j) {
                    if (padding_ == PaddingMode::replicate_edge) {
                        const std::size_t si =
                            std::clamp<long>(static_cast<long>(i) - static_cast<long>(pad_top_), 0,
                                             static_cast<long>(in_h_) - 1);
                        const std::size_t sj =
                            std::clamp<long>(static_cast<long>(j) - static_cast<long>(pad_left_), 0,
                                             static_cast<long>(in_w_) - 1);
                        d[si * in_w_ + sj] += dp[i * wp + j];
                    } else if (i >= pad_top_ && i < pad_top_ + in_h_ && j >= pad_left_ &&
                               j < pad_left_ + in_w_) {
                        d[(i - pad_top_) * in_w_ + (j - pad_left_)] += dp[i * wp + j];
                    }
                }
        }
    return din;
}

// ------------------------------------------------------------ BatchNorm

BatchNorm2d::BatchNorm2d(std::size_t channels, const std::string& name, double eps,
                         double momentum)
    : Layer(name), channels_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = Param(Tensor::full({channels}, 1.0), name + ".gamma");
    beta_ = Param(Tensor::zeros({channels}), name + ".beta");
    running_mean_ = Tensor::zeros({channels});
    running_var_ = Tensor::full({channels}, 1.0);
}

Tensor BatchNorm2d::do_forward(const Tensor& x, bool training) {
    require_rank(x, 4, "batchnorm '" + name_ + "'");
    if (x.dim(1) != channels_)
        throw DimensionError("batchnorm '" + name_ + "' expects " + std::to_string(channels_) +
                             " channels, got shape " + x.shape_str());
    const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    if (training && batch < 2)
        throw DegenerateBatchError("batchnorm '" + name_ +
                                   "' needs batch size >= 2 in training mode, got " +
                                   std::to_string(batch));
    trained_forward_ = training;
    const std::size_t plane = h * w;
    const double m = static_cast<double>(batch * plane);

    Tensor mean({channels_}), var({channels_});
    if (training) {
        for (std::size_t c = 0; c < channels_; ++c) {
            double s = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = x.data() + (b * channels_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
            }
            mean[c] = s / m;
            double sq = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = x.data() + (b * channels_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mean[c];
                    sq += d * d;
                }
            }
            var[c] = sq / m;  // biased estimator, used consistently everywhere
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean[c];
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var[c];
        }
    } else {
        mean = running_mean_;
        var = running_var_;
    }

    inv_std_cache_ = Tensor({channels_});
    for (std::size_t c = 0; c < channels_; ++c) inv_std_cache_[c] = 1.0 / std::sqrt(var[c] + eps_);

    centered_cache_ = Tensor(x.shape());
    xhat_cache_ = Tensor(x.shape());
    Tensor y(x.shape());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels_; ++c) {
            const double* p = x.data() + (b * channels_ + c) * plane;
            double* ctr = centered_cache_.data() + (b * channels_ + c) * plane;
            double* xh = xhat_cache_.data() + (b * channels_ + c) * plane;
            double* o = y.data() + (b * channels_ + c) * plane;
            const double mu = mean[c], is = inv_std_cache_[c];
            const double g = gamma_.value[c], be = beta_.value[c];
            for (std::size_t i = 0; i < plane; ++i) {
                ctr[i] = p[i] - mu;
                xh[i] = ctr[i] * is;
                o[i] = g * xh[i] + be;
            }
        }
    return y;
}

Tensor BatchNorm2d::do_backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(xhat_cache_))
        throw DimensionError("batchnorm '" + name_ + "' backward got gradient shape " +
                             grad_out.shape_str());
    const std::size_t batch = grad_out.dim(0), plane = grad_out.dim(2) * grad_out.dim(3);
    const double m = static_cast<double>(batch * plane);
    Tensor din(grad_out.shape());

    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_g = 0, sum_gx = 0;
        for (std::size_t b = 0; b < batch; ++b) {
            const double* g = grad_out.data() + (b * channels_ + c) * plane;
            const double* xh = xhat_cache_.data() + (b * channels_ + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
        }
        gamma_.grad[c] += sum_gx;
        beta_.grad[c] += sum_g;

        const double ga = gamma_.value[c], is = inv_std_cache_[c];
        for (std::size_t b = 0; b < batch; ++b) {
            const double* g = grad_out.data() + (b * channels_ + c) * plane;
            const double* xh = xhat_cache_.data() + (b * channels_ + c) * plane;
            double* d = din.data() + (b * channels_ + c) * plane;
            if (trained_forward_) {
                for (std::size_t i = 0; i < plane; ++i)
                    d[i] = ga * is / m * (m * g[i] - sum_g - xh[i] * sum_gx);
            } else {
                for (std::size_t i = 0; i < plane; ++i) d[i] = ga * is * g[i];
            }
        }
    }
    return din;
}

// ------------------------------------------------------------ MaxPool3d

MaxPool3dLayer::MaxPool3dLayer(std::size_t k1, std::size_t k2, std::size_t k3,
                               const std::string& name)
    : Layer(name), k1_(k1), k2_(k2), k3_(k3) {
    if (k1 == 0 || k2 == 0 || k3 == 0)
        throw ConfigError("maxpool3d '" + name + "' kernel dims must be positive");
}

Tensor MaxPool3dLayer::do_forward(const Tensor& x, bool) {
    require_rank(x, 4, "maxpool3d '" + name_ + "'");
    const std::size_t batch = x.dim(0), d1 = x.dim(1), d2 = x.dim(2), d3 = x.dim(3);
    if (k1_ > d1 || k2_ > d2 || k3_ > d3)
        throw DimensionError("maxpool3d '" + name_ + "' kernel (" + std::to_string(k1_) + "," +
                             std::to_string(k2_) + "," + std::to_string(k3_) +
                             ") exceeds input " + x.shape_str());
    in_shape_ = x.shape();
    const std::size_t o1 = d1 - k1_ + 1, o2 = d2 - k2_ + 1, o3 = d3 - k3_ + 1;
    Tensor out({batch, o1, o2, o3});
    argmax_.assign(batch * o1 * o2 * o3, 0);

    for (std::size_t b = 0; b < batch; ++b) {
        const double* vol = x.data() + b * d1 * d2 * d3;
        for (std::size_t i = 0; i < o1; ++i)
            for (std::size_t j = 0; j < o2; ++j)
                for (std::size_t k = 0; k < o3; ++k) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (std::size_t u = 0; u < k1_; ++u)
                        for (std::size_t v = 0; v < k2_; ++v)
                            for (std::size_t w = 0; w < k3_; ++w) {
                                const std::size_t idx =
                                    ((i + u) * d2 + (j + v)) * d3 + (k + w);
                                if (vol[idx] > best) {  // strict: first index wins ties
                                    best = vol[idx];
                                    best_idx = idx;
                                }
                            }
                    const std::size_t oidx = ((b * o1 + i) * o2 + j) * o3 + k;
                    out[oidx] = best;
                    argmax_[oidx] = b * d1 * d2 * d3 + best_idx;
                }
    }
    return out;
}

Tensor MaxPool3dLayer::do_backward(const Tensor& grad_out) {
    if (grad_out.size() != argmax_.size())
        throw DimensionError("maxpool3d '" + name_ + "' backward got gradient shape " +
                             grad_out.shape_str());
    Tensor din = Tensor::zeros(in_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) din[argmax_[i]] += grad_out[i];
    return din;
}

// -------------------------------------------------------------- Flatten

Tensor Flatten::do_forward(const Tensor& x, bool) {
    if (x.rank() < 2)
        throw DimensionError("flatten expects rank >= 2, got shape " + x.shape_str());
    in_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor Flatten::do_backward(const Tensor& grad_out) {
    return grad_out.reshaped(in_shape_);
}

// --------------------------------------------------------- softmax+xent

XentResult softmax_xent(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw DimensionError("softmax_xent expects rank-2 logits, got " + logits.shape_str());
    const std::size_t batch = logits.dim(0), k = logits.dim(1);
    if (labels.size() != batch)
        throw DataConsistencyError("softmax_xent got " + std::to_string(batch) + " rows but " +
                                   std::to_string(labels.size()) + " labels");
    XentResult r;
    r.probs = Tensor({batch, k});
    r.dlogits = Tensor::zeros({batch, k});
    double total = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw LabelError("label " + std::to_string(y) + " out of range [0, " +
                             std::to_string(k) + ")");
        const double* z = logits.data() + b * k;
        double zmax = z[0];
        for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
        const double lse = zmax + std::log(sum);
        total += lse - z[y];
        double* p = r.probs.data() + b * k;
        double* d = r.dlogits.data() + b * k;
        for (std::size_t j = 0; j < k; ++j) {
            p[j] = std::exp(z[j] - lse);
            d[j] = p[j] / static_cast<double>(batch);
        }
        d[y] -= 1.0 / static_cast<double>(batch);
    }
    r.loss = total / static_cast<double>(batch);
    return r;
}

// ------------------------------------------------------------ Optimizer

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || learning_rate > 0.8)
        throw ConfigError("learning rate must lie in (0, 0.8], got " +
                          std::to_string(learning_rate));
    if (kind == Kind::adam) {
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || epsilon <= 0)
            throw ConfigError("adam betas must lie in [0,1) and epsilon must be positive");
    }
}

OptimizerConfig::Kind OptimizerConfig::parse_kind(const std::string& s) {
    if (s == "sgd") return Kind::sgd;
    if (s == "adam") return Kind::adam;
    throw ConfigError("unknown optimizer kind '" + s + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Optimizer::step(const std::vector<Param*>& params) {
    if (cfg_.kind == OptimizerConfig::Kind::adam && m_.empty()) {
        for (const Param* p : params) {
            m_.push_back(Tensor::zeros(p->value.shape()));
            v_.push_back(Tensor::zeros(p->value.shape()));
        }
    }
    if (cfg_.kind == OptimizerConfig::Kind::adam && m_.size() != params.size())
        throw ProtocolError("optimizer saw " + std::to_string(params.size()) +
                            " params but holds state for " + std::to_string(m_.size()));

    if (cfg_.kind == OptimizerConfig::Kind::sgd) {
        const double lr = cfg_.learning_rate;
        for (Param* p : params) {
            for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
            p->zero_grad();
        }
        return;
    }

    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param* p = params[pi];
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p->value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
        p->zero_grad();
    }
}

std::size_t param_count(const std::vector<Param*>& params) {
    std::size_t n = 0;
    for (const Param* p : params) n += p->value.size();
    return n;
}

}  // namespace wavpool
