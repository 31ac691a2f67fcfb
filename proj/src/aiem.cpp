#include "vqcnir/aiem.hpp"

#include "vqcnir/errors.hpp"

namespace vqcnir {

void IMAConvConfig::validate() const
{
    if (splits < 2) {
        throw ConfigError("IMAConv: splits S must be >= 2, got " + std::to_string(splits));
    }
    if (in_channels < 1 || in_channels % splits != 0) {
        throw ConfigError("IMAConv: S=" + std::to_string(splits) +
                          " does not divide C_in=" + std::to_string(in_channels));
    }
    if (curve_order < 1) {
        throw ConfigError("IMAConv: curve order N must be >= 1");
    }
    if (outputs() % splits != 0) {
        throw ConfigError("IMAConv: S does not divide C_out=" + std::to_string(outputs()));
    }
}

Tensor curve_map(const Tensor& x, const CurveParams& params)
{
    Tensor c = x;
    for (const Tensor& a : params.maps) {
        if (a.shape() != x.shape()) {
            throw DimensionError("curve_map: curve parameter " + shape_str(a.shape()) +
                                 " does not match feature part " + shape_str(x.shape()));
        }
        c = add(c, mul(a, mul(c, one_minus(c))));
    }
    return c;
}

CurveEstimator CurveEstimator::create(Index complement_channels, Index hidden, Index part,
                                      Index order, Rng& rng)
{
    CurveEstimator e;
    e.order = order;
    e.part = part;
    e.conv5 = Conv2d::create(complement_channels, hidden, 5, rng, Conv2dOptions{1, 2, 1, 1});
    e.conv3 = Conv2d::create(hidden, hidden, 3, rng, Conv2dOptions{1, 1, 1, 1});
    e.conv1 = Conv2d::pointwise(hidden, order * part, rng);
    return e;
}

CurveParams CurveEstimator::operator()(const Tensor& complement) const
{
    Tensor h = leaky_relu(conv5(complement), 0.2);
    h = leaky_relu(conv3(h), 0.2);
    Tensor a = sigmoid(conv1(h));
    return CurveParams{channel_split(a, std::vector<Index>(static_cast<std::size_t>(order), part))};
}

void CurveEstimator::collect(const std::string& prefix, ParamList& out) const
{
    conv5.collect(prefix + ".conv5", out);
    conv3.collect(prefix + ".conv3", out);
    conv1.collect(prefix + ".conv1", out);
}

Tensor complement_of(const std::vector<Tensor>& parts, std::size_t part)
{
    std::vector<Tensor> rest;
    rest.reserve(parts.size() - 1);
    for (std::size_t j = 0; j < parts.size(); ++j) {
        if (j != part) {
            rest.push_back(parts[j]);
        }
    }
    return channel_concat(rest);
}

IMAConv IMAConv::create(const IMAConvConfig& config, Rng& rng)
{
    config.validate();
    IMAConv m;
    m.config = config;
    const Index part = config.part_channels();
    const Index hidden = config.hidden > 0 ? config.hidden : part;
    const Index out_part = config.outputs() / config.splits;
    for (Index i = 0; i < config.splits; ++i) {
        m.estimators.push_back(CurveEstimator::create(config.in_channels - part, hidden, part,
                                                      config.curve_order, rng));
        m.convs.push_back(Conv2d::create(part, out_part, 3, rng, Conv2dOptions{1, 1, 1, 1}));
    }
    return m;
}

Tensor IMAConv::operator()(const Tensor& x) const
{
    if (x.rank() != 4 || x.dim(1) != config.in_channels) {
        throw DimensionError("IMAConv: expected " + std::to_string(config.in_channels) +
                             " channels on axis 1, got " + shape_str(x.shape()));
    }
    const auto S = static_cast<std::size_t>(config.splits);
    std::vector<Tensor> parts =
        channel_split(x, std::vector<Index>(S, config.part_channels()));
    std::vector<Tensor> outs;
    outs.reserve(S);
    for (std::size_t i = 0; i < S; ++i) {
        CurveParams a = estimators[i](complement_of(parts, i));
        outs.push_back(convs[i](curve_map(clamp(parts[i], 0.0, 1.0), a)));
    }
    return channel_concat(outs);
}

void IMAConv::collect(const std::string& prefix, ParamList& out) const
{
    for (std::size_t i = 0; i < estimators.size(); ++i) {
        estimators[i].collect(prefix + ".est" + std::to_string(i), out);
        convs[i].collect(prefix + ".conv" + std::to_string(i), out);
    }
}

HIE HIE::create(const HIEConfig& config, Rng& rng, bool zero_output)
{
    const Index C = config.channels;
    const Index E = 2 * C;
    if (C < 1) {
        throw ConfigError("HIE: channels must be >= 1");
    }
    if (E % 2 != 0) {
        throw ConfigError("HIE: expanded width must be even");
    }
    if (config.reduction < 1 || E % config.reduction != 0) {
        throw ConfigError("HIE: reduction ratio r=" + std::to_string(config.reduction) +
                          " must divide the expanded width " + std::to_string(E));
    }
    HIE h;
    h.config = config;
    h.norm = LayerNorm::create(C);
    h.expand = Conv2d::pointwise(C, E, rng);
    h.dw3 = Conv2d::depthwise(E, 3, 1, rng);
    h.ca_reduce = Conv2d::pointwise(E, E / config.reduction, rng);
    h.ca_expand = Conv2d::pointwise(E / config.reduction, E, rng);
    h.ca_proj = Conv2d::pointwise(E, C, rng);
    h.lka_dw5 = Conv2d::depthwise(E, 5, 1, rng);
    h.lka_dw7 = Conv2d::depthwise(E, 7, 3, rng);
    h.lka_pw = Conv2d::pointwise(E, E, rng);
    h.lka_proj = Conv2d::pointwise(E, C, rng);
    h.out = Conv2d::pointwise(C, C, rng, zero_output ? Init::Zero : Init::Uniform);
    return h;
}

Tensor HIE::operator()(const Tensor& x) const
{
    const Index C = config.channels;
    Tensor u = dw3(expand(norm(x)));

    std::vector<Tensor> halves = channel_split(u, {C, C});
    Tensor gate = mul(halves[0], halves[1]);

    Tensor attn = sigmoid(ca_expand(relu(ca_reduce(global_avg_pool(u)))));
    Tensor channel = ca_proj(mul_broadcast(u, attn));

    Tensor spatial = lka_proj(mul(u, lka_pw(lka_dw7(lka_dw5(u)))));

    return add(x, out(mul(mul(gate, channel), spatial)));
}

void HIE::collect(const std::string& prefix, ParamList& out_params) const
{
    norm.collect(prefix + ".norm", out_params);
    expand.collect(prefix + ".expand", out_params);
    dw3.collect(prefix + ".dw3", out_params);
    ca_reduce.collect(prefix + ".ca_reduce", out_params);
    ca_expand.collect(prefix + ".ca_expand", out_params);
    ca_proj.collect(prefix + ".ca_proj", out_params);
    lka_dw5.collect(prefix + ".lka_dw5", out_params);
    lka_dw7.collect(prefix + ".lka_dw7", out_params);
    lka_pw.collect(prefix + ".lka_pw", out_params);
    lka_proj.collect(prefix + ".lka_proj", out_params);
    out.collect(prefix + ".out", out_params);
}

AIEM AIEM::create(const AIEMConfig& config, Rng& rng, bool zero_output)
{
    AIEM m;
    m.hie = HIE::create(HIEConfig{config.channels, config.reduction}, rng, zero_output);
    m.norm = LayerNorm::create(config.channels);
    m.in_proj = Conv2d::pointwise(config.channels, config.channels, rng);
    m.imaconv = IMAConv::create(
        IMAConvConfig{config.channels, config.splits, config.curve_order, 0, 0}, rng);
    m.out_proj = Conv2d::pointwise(config.channels, config.channels, rng,
                                   zero_output ? Init::Zero : Init::Uniform);
    return m;
}

Tensor AIEM::operator()(const Tensor& x) const
{
    Tensor y = hie(x);
    return add(y, out_proj(imaconv(in_proj(norm(y)))));
}

void AIEM::collect(const std::string& prefix, ParamList& out) const
{
    hie.collect(prefix + ".hie", out);
    norm.collect(prefix + ".norm", out);
    in_proj.collect(prefix + ".in_proj", out);
    imaconv.collect(prefix + ".imaconv", out);
    out_proj.collect(prefix + ".out_proj", out);
}

} // namespace vqcnir
