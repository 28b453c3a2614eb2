#include "parsefuse/optimizer.hpp"

#include <cmath>

namespace parsefuse {

AdamW::AdamW(std::vector<Parameter*> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.emplace_back(p->tensor.size(), 0.0);
        v_.emplace_back(p->tensor.size(), 0.0);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t k = 0; k < params_.size(); ++k) {
        Parameter& p = *params_[k];
        auto& theta = p.tensor.data();
        const auto& g = p.tensor.grad();
        auto& m = m_[k];
        auto& v = v_[k];
        const double decay = p.weight_decay_eligible ? cfg_.weight_decay : 0.0;
        for (size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + decay * theta[i]);
        }
    }
}

void AdamW::zero_grad() {
    for (Parameter* p : params_) p->tensor.zero_grad();
}

}  // namespace parsefuse
