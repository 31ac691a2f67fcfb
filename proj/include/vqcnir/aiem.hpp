#pragma once

#include "vqcnir/nn.hpp"

#include <vector>

namespace vqcnir {

struct IMAConvConfig {
    Index in_channels = 16;
    Index splits = 4;      // S
    Index curve_order = 4; // N
    Index out_channels = 0; // 0 -> in_channels
    Index hidden = 0;       // curve-estimator width, 0 -> part_channels

    Index part_channels() const { return in_channels / splits; }
    Index outputs() const { return out_channels > 0 ? out_channels : in_channels; }
    /// Throws ConfigError unless S >= 2, S | C_in, N >= 1 and S | C_out.
    void validate() const;
};

/// A_1..A_N, each shaped like the part it modulates, values in (0,1).
struct CurveParams {
    std::vector<Tensor> maps;
};

/// C_0 = x, C_n = C_{n-1} + A_n * C_{n-1} * (1 - C_{n-1}) for n = 1..N.
Tensor curve_map(const Tensor& x, const CurveParams& params);

/// conv5x5 -> lrelu -> conv3x3 -> lrelu -> conv1x1 -> sigmoid, split into N maps.
struct CurveEstimator {
    Conv2d conv5;
    Conv2d conv3;
    Conv2d conv1;
    Index order = 1;
    Index part = 1;

    static CurveEstimator create(Index complement_channels, Index hidden, Index part, Index order,
                                 Rng& rng);
    CurveParams operator()(const Tensor& complement) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Channel-split curve enhancement where each part's curves are estimated
/// from the complementary channels. Parts are clamped to [0,1] before their
/// curves are applied.
struct IMAConv {
    IMAConvConfig config;
    std::vector<CurveEstimator> estimators; // one per part
    std::vector<Conv2d> convs;              // 3x3, one per part

    static IMAConv create(const IMAConvConfig& config, Rng& rng);
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Channels of all parts except `part`, concatenated in order.
Tensor complement_of(const std::vector<Tensor>& parts, std::size_t part);

struct HIEConfig {
    Index channels = 16;
    Index reduction = 4; // channel-attention ratio r on the expanded width
};

/// Hierarchical information extraction: LN, pointwise expand to 2C, depthwise
/// 3x3, then SimpleGate / channel attention / large-kernel attention branches
/// (each C wide) fused by elementwise product, pointwise out, residual.
struct HIE {
    HIEConfig config;
    LayerNorm norm;
    Conv2d expand;   // C -> 2C
    Conv2d dw3;      // 2C depthwise
    Conv2d ca_reduce; // 2C -> 2C/r
    Conv2d ca_expand; // 2C/r -> 2C
    Conv2d ca_proj;   // 2C -> C
    Conv2d lka_dw5;
    Conv2d lka_dw7;   // dilation 3
    Conv2d lka_pw;    // 2C -> 2C
    Conv2d lka_proj;  // 2C -> C
    Conv2d out;       // C -> C

    static HIE create(const HIEConfig& config, Rng& rng, bool zero_output = true);
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

struct AIEMConfig {
    Index channels = 16;
    Index splits = 4;
    Index curve_order = 4;
    Index reduction = 4;
};

/// HIE followed by IMAE: y + pw_out(IMAConv(pw_in(LN(y)))).
struct AIEM {
    HIE hie;
    LayerNorm norm;
    Conv2d in_proj;
    IMAConv imaconv;
    Conv2d out_proj;

    static AIEM create(const AIEMConfig& config, Rng& rng, bool zero_output = true);
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

} // namespace vqcnir
