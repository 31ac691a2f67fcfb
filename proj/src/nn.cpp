#include "vqcnir/nn.hpp"

#include <cmath>

namespace vqcnir {

void set_trainable(const ParamList& params, bool on)
{
    for (const auto& p : params) {
        Tensor t = p.tensor;
        t.set_requires_grad(on);
        if (!on) {
            t.clear_grad();
        }
    }
}

void zero_grads(const ParamList& params)
{
    for (const auto& p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
}

namespace {

Tensor uniform_param(Shape shape, Index fan_in, Rng& rng)
{
    Tensor t = Tensor::zeros(std::move(shape), true);
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (double& v : t.mutable_data()) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

} // namespace

Conv2d Conv2d::create(Index in, Index out, Index kernel, Rng& rng, Conv2dOptions opt, Init init)
{
    if (opt.padding < 0) {
        opt.padding = opt.dilation * (kernel - 1) / 2;
    }
    const Index cin_g = in / opt.groups;
    Conv2d c;
    c.opt = opt;
    Shape ws{out, cin_g, kernel, kernel};
    c.weight = init == Init::Zero ? Tensor::zeros(ws, true)
                                  : uniform_param(ws, cin_g * kernel * kernel, rng);
    c.bias = Tensor::zeros({out}, true);
    return c;
}

Conv2d Conv2d::depthwise(Index channels, Index kernel, Index dilation, Rng& rng)
{
    return create(channels, channels, kernel, rng,
                  Conv2dOptions{1, -1, dilation, channels});
}

Conv2d Conv2d::pointwise(Index in, Index out, Rng& rng, Init init)
{
    return create(in, out, 1, rng, Conv2dOptions{}, init);
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const
{
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

ConvTranspose2d ConvTranspose2d::create(Index in, Index out, Index kernel, Index stride,
                                        Index padding, Rng& rng)
{
    ConvTranspose2d c;
    c.stride = stride;
    c.padding = padding;
    // Each output pixel receives roughly in * (kernel/stride)^2 contributions.
    const Index fan = std::max<Index>(1, in * kernel * kernel / (stride * stride));
    c.weight = uniform_param({in, out, kernel, kernel}, fan, rng);
    c.bias = Tensor::zeros({out}, true);
    return c;
}

void ConvTranspose2d::collect(const std::string& prefix, ParamList& out) const
{
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

LayerNorm LayerNorm::create(Index channels)
{
    return {Tensor::full({channels}, 1.0, true), Tensor::zeros({channels}, true)};
}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const
{
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

ResBlock ResBlock::create(Index channels, Rng& rng)
{
    Conv2dOptions same{1, 1, 1, 1};
    return {Conv2d::create(channels, channels, 3, rng, same),
            Conv2d::create(channels, channels, 3, rng, same)};
}

Tensor ResBlock::operator()(const Tensor& x) const
{
    return add(x, conv2(leaky_relu(conv1(leaky_relu(x, 0.2)), 0.2)));
}

void ResBlock::collect(const std::string& prefix, ParamList& out) const
{
    conv1.collect(prefix + ".conv1", out);
    conv2.collect(prefix + ".conv2", out);
}

} // namespace vqcnir
