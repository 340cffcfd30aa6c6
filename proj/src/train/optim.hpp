#pragma once

#include "nn/module.hpp"

namespace ral::train {

struct OptimConfig {
    double lr = 3e-4;
    double lr_final = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// epoch 0 gives lr, the final epoch gives lr_final.
inline double cosine_lr(const OptimConfig& cfg, int epoch, int total_epochs) {
    if (total_epochs <= 1 || epoch >= total_epochs - 1) return cfg.lr_final;
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return cfg.lr_final +
           0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(3.14159265358979323846 * t));
}

// Adam with decoupled weight decay. Decay touches only parameters whose store
// entry is flagged (weights; never biases or norm affine parameters).
class Adam {
public:
    Adam(nn::ParamStoreT<float>& params, OptimConfig cfg) : params_(&params), cfg_(cfg) {
        m_.resize(params.items().size());
        v_.resize(params.items().size());
        for (std::size_t i = 0; i < params.items().size(); ++i) {
            const auto n = static_cast<std::size_t>(params.items()[i].tensor.size());
            m_[i].assign(n, 0.0f);
            v_[i].assign(n, 0.0f);
        }
    }

    void step(double lr) {
        ++t_;
        const float b1 = static_cast<float>(cfg_.beta1);
        const float b2 = static_cast<float>(cfg_.beta2);
        const float bc1 = 1.0f - std::pow(b1, static_cast<float>(t_));
        const float bc2 = 1.0f - std::pow(b2, static_cast<float>(t_));
        const float eps = static_cast<float>(cfg_.eps);
        const float lrf = static_cast<float>(lr);
        const float wd = static_cast<float>(cfg_.weight_decay);
        auto& items = params_->items();
        for (std::size_t i = 0; i < items.size(); ++i) {
            auto& p = items[i].tensor;
            if (!p.has_grad()) p.grad();  // zero grads count as zero
            const auto& g = p.grad_vec();
            auto& m = m_[i];
            auto& v = v_[i];
            float* w = p.data();
            const bool decay = items[i].decay && wd > 0.0f;
            for (std::size_t k = 0; k < g.size(); ++k) {
                m[k] = b1 * m[k] + (1.0f - b1) * g[k];
                v[k] = b2 * v[k] + (1.0f - b2) * g[k] * g[k];
                if (decay) w[k] -= lrf * wd * w[k];
                w[k] -= lrf * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }
    std::vector<std::vector<float>>& moment1() { return m_; }
    std::vector<std::vector<float>>& moment2() { return v_; }

private:
    nn::ParamStoreT<float>* params_;
    OptimConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace ral::train
