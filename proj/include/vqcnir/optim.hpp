#pragma once

#include "vqcnir/nn.hpp"

#include <cstdint>
#include <vector>

namespace vqcnir {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. Parameters that do not
/// require a gradient are skipped; a parameter with no gradient buffer is
/// treated as having a zero gradient.
class Adam {
public:
    Adam(ParamList params, AdamConfig config = {});

    void step(double lr);
    void zero_grad();
    std::int64_t steps() const { return t_; }
    const ParamList& params() const { return params_; }

private:
    ParamList params_;
    AdamConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
};

/// Piecewise-constant decay: initial * decay^(number of milestones <= iteration).
struct MultiStepLR {
    double initial = 1e-4;
    std::vector<std::int64_t> milestones;
    double decay = 0.5;

    void validate() const;
    double at(std::int64_t iteration) const;
};

} // namespace vqcnir
