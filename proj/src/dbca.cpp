#include "vqcnir/dbca.hpp"

#include "vqcnir/errors.hpp"

#include <cmath>

namespace vqcnir {

Tensor centered_identity_kernel(Index channels, Index kernel, bool requires_grad)
{
    Tensor w = Tensor::zeros({channels, channels, kernel, kernel}, requires_grad);
    auto d = w.mutable_data();
    const Index c = kernel / 2;
    for (Index o = 0; o < channels; ++o) {
        d[static_cast<std::size_t>(((o * channels + o) * kernel + c) * kernel + c)] = 1.0;
    }
    return w;
}

DBCA DBCA::create(const DBCAConfig& config, Rng& rng)
{
    if (config.channels < 1) {
        throw ConfigError("DBCA: channels must be >= 1");
    }
    if (config.kernel < 1 || config.kernel % 2 == 0) {
        throw ConfigError("DBCA: deformable kernel must be odd");
    }
    const Index C = config.channels;
    const Index k2 = config.kernel * config.kernel;
    DBCA m;
    m.config = config;
    m.norm_d = LayerNorm::create(C);
    m.norm_g = LayerNorm::create(C);
    m.query_d = Conv2d::pointwise(C, C, rng);
    m.query_g = Conv2d::pointwise(C, C, rng);
    m.value_d = Conv2d::pointwise(C, C, rng);
    m.value_g = Conv2d::pointwise(C, C, rng);
    m.gamma_d = Tensor::zeros({1, C, 1, 1}, true);
    m.gamma_g = Tensor::zeros({1, C, 1, 1}, true);
    m.offset_conv = Conv2d::create(2 * C, 2 * k2, config.offset_kernel, rng,
                                   Conv2dOptions{1, (config.offset_kernel - 1) / 2, 1, 1},
                                   Init::Zero);
    m.deform_weight = centered_identity_kernel(C, config.kernel);
    m.deform_bias = Tensor::zeros({C}, true);
    return m;
}

CrossAttentionOutput DBCA::cross_attention(const Tensor& fd, const Tensor& fg) const
{
    if (fd.shape() != fg.shape()) {
        throw DimensionError("DBCA: F_D " + shape_str(fd.shape()) + " and F_G " +
                             shape_str(fg.shape()) + " differ");
    }
    if (fd.rank() != 4 || fd.dim(1) != config.channels) {
        throw DimensionError("DBCA: expected " + std::to_string(config.channels) +
                             " channels on axis 1, got " + shape_str(fd.shape()));
    }
    const Index B = fd.dim(0);
    const Index C = fd.dim(1);
    const Index HW = fd.dim(2) * fd.dim(3);
    const Shape flat{B, C, HW};

    Tensor nd = norm_d(fd);
    Tensor ng = norm_g(fg);
    Tensor qd = reshape(query_d(nd), flat);
    Tensor qg = reshape(query_g(ng), flat);
    Tensor vd = reshape(value_d(nd), flat);
    Tensor vg = reshape(value_g(ng), flat);

    Tensor scores = scale(matmul(qd, transpose_last2(qg)), 1.0 / std::sqrt(static_cast<double>(C)));
    Tensor m = softmax(scores, -1);
    Tensor ad = reshape(matmul(m, vd), fd.shape());
    Tensor ag = reshape(matmul(m, vg), fd.shape());

    return {add(mul_broadcast(ag, gamma_d), fd), add(mul_broadcast(ad, gamma_g), fg), m};
}

Tensor DBCA::estimate_offsets(const Tensor& fd_out, const Tensor& fg_out) const
{
    return offset_conv(channel_concat({fd_out, fg_out}));
}

Tensor DBCA::operator()(const Tensor& fd, const Tensor& fg) const
{
    CrossAttentionOutput att = cross_attention(fd, fg);
    Tensor offset = estimate_offsets(att.fd_out, att.fg_out);
    return deform_conv2d(att.fd_out, offset, deform_weight, deform_bias);
}

void DBCA::collect(const std::string& prefix, ParamList& out) const
{
    norm_d.collect(prefix + ".norm_d", out);
    norm_g.collect(prefix + ".norm_g", out);
    query_d.collect(prefix + ".query_d", out);
    query_g.collect(prefix + ".query_g", out);
    value_d.collect(prefix + ".value_d", out);
    value_g.collect(prefix + ".value_g", out);
    out.push_back({prefix + ".gamma_d", gamma_d});
    out.push_back({prefix + ".gamma_g", gamma_g});
    offset_conv.collect(prefix + ".offset_conv", out);
    out.push_back({prefix + ".deform.weight", deform_weight});
    out.push_back({prefix + ".deform.bias", deform_bias});
}

} // namespace vqcnir
