#include "vqcnir/optim.hpp"

#include "vqcnir/errors.hpp"

#include <cmath>

namespace vqcnir {

Adam::Adam(ParamList params, AdamConfig config) : params_(std::move(params)), config_(config)
{
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
    }
}

void Adam::step(double lr)
{
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor p = params_[i].tensor;
        if (!p.requires_grad()) {
            continue;
        }
        auto g = p.grad();
        auto w = p.mutable_data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            m[j] = b1 * m[j] + (1.0 - b1) * gj;
            v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
            const double mh = m[j] / c1;
            const double vh = v[j] / c2;
            w[j] -= lr * mh / (std::sqrt(vh) + config_.eps);
        }
    }
}

void Adam::zero_grad() { zero_grads(params_); }

void MultiStepLR::validate() const
{
    if (!(initial > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (!(decay > 0.0 && decay < 1.0)) {
        throw ConfigError("lr decay must lie in (0,1)");
    }
    for (std::size_t i = 1; i < milestones.size(); ++i) {
        if (milestones[i] <= milestones[i - 1]) {
            throw ConfigError("lr milestones must be strictly increasing");
        }
    }
}

double MultiStepLR::at(std::int64_t iteration) const
{
    double lr = initial;
    for (std::int64_t m : milestones) {
        if (m <= iteration) {
            lr *= decay;
        }
    }
    return lr;
}

} // namespace vqcnir
