#pragma once

#include "vqcnir/ops.hpp"
#include "vqcnir/rng.hpp"
#include "vqcnir/tensor.hpp"

#include <string>
#include <vector>

namespace vqcnir {

struct NamedParam {
    std::string name;
    Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

void set_trainable(const ParamList& params, bool on);
void zero_grads(const ParamList& params);

enum class Init { Uniform, Zero };

/// Weight/bias pair with fixed convolution geometry.
struct Conv2d {
    Tensor weight;
    Tensor bias;
    Conv2dOptions opt;

    /// `same` padding is derived from kernel size and dilation when opt.padding < 0.
    static Conv2d create(Index in, Index out, Index kernel, Rng& rng, Conv2dOptions opt = {},
                         Init init = Init::Uniform);
    /// Depthwise conv: groups == channels.
    static Conv2d depthwise(Index channels, Index kernel, Index dilation, Rng& rng);
    static Conv2d pointwise(Index in, Index out, Rng& rng, Init init = Init::Uniform);

    Tensor operator()(const Tensor& x) const { return conv2d(x, weight, bias, opt); }
    void collect(const std::string& prefix, ParamList& out) const;
};

struct ConvTranspose2d {
    Tensor weight; // [in, out, k, k]
    Tensor bias;
    Index stride = 2;
    Index padding = 1;

    static ConvTranspose2d create(Index in, Index out, Index kernel, Index stride, Index padding,
                                  Rng& rng);
    Tensor operator()(const Tensor& x) const
    {
        return conv_transpose2d(x, weight, bias, stride, padding);
    }
    void collect(const std::string& prefix, ParamList& out) const;
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;

    static LayerNorm create(Index channels);
    Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta, 1e-6); }
    void collect(const std::string& prefix, ParamList& out) const;
};

/// x + conv(lrelu(conv(lrelu(x))))
struct ResBlock {
    Conv2d conv1;
    Conv2d conv2;

    static ResBlock create(Index channels, Rng& rng);
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

} // namespace vqcnir
