#pragma once

#include <cmath>
#include <vector>

#include "fgl/autograd.hpp"

namespace fgl::nn {

class Adam {
public:
    explicit Adam(Params& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : params_.items()) {
            m_.push_back(Tensor::zeros(p.node->value.shape));
            v_.push_back(Tensor::zeros(p.node->value.shape));
        }
    }

    void zero_grad() { params_.zero_grad(); }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params_.items().size(); ++i) {
            const auto& info = params_.items()[i];
            if (!info.trainable) continue;
            auto& theta = info.node->value;
            const auto& g = info.node->ensure_grad();
            for (std::size_t j = 0; j < theta.data.size(); ++j) {
                m_[i].data[j] = beta1_ * m_[i].data[j] + (1.0 - beta1_) * g.data[j];
                v_[i].data[j] = beta2_ * v_[i].data[j] + (1.0 - beta2_) * g.data[j] * g.data[j];
                const double mh = m_[i].data[j] / bc1;
                const double vh = v_[i].data[j] / bc2;
                theta.data[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    Params& params_;
    double lr_, beta1_, beta2_, eps_;
    std::vector<Tensor> m_, v_;
    long t_ = 0;
};

}  // namespace fgl::nn
