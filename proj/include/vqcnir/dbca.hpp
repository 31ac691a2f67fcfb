#pragma once

#include "vqcnir/nn.hpp"

namespace vqcnir {

struct DBCAConfig {
    Index channels = 16;
    Index kernel = 3;        // deformable kernel k
    Index offset_kernel = 7; // large-kernel offset estimator
};

struct CrossAttentionOutput {
    Tensor fd_out;    // gamma_D * A_G + F_D
    Tensor fg_out;    // gamma_G * A_D + F_G
    Tensor attention; // [B, C, C], rows sum to one
};

/// Deformable bi-directional cross-attention between a restoration-decoder
/// feature F_D and a codebook-prior feature F_G of equal shape.
///
/// Both directions share a single C x C channel-attention matrix
/// softmax(Q_D Q_G^T / sqrt(C)); the D stream receives the G-valued
/// aggregate and vice versa. The fused pair then drives an offset estimator
/// whose offsets deform a k x k convolution over the D stream.
struct DBCA {
    DBCAConfig config;
    LayerNorm norm_d;
    LayerNorm norm_g;
    Conv2d query_d;
    Conv2d query_g;
    Conv2d value_d;
    Conv2d value_g;
    Tensor gamma_d; // [1, C, 1, 1], starts at 0
    Tensor gamma_g;
    Conv2d offset_conv; // 2C -> 2k^2, starts at 0
    Tensor deform_weight; // [C, C, k, k], starts as the centred identity tap
    Tensor deform_bias;

    static DBCA create(const DBCAConfig& config, Rng& rng);

    CrossAttentionOutput cross_attention(const Tensor& fd, const Tensor& fg) const;
    Tensor estimate_offsets(const Tensor& fd_out, const Tensor& fg_out) const;
    Tensor operator()(const Tensor& fd, const Tensor& fg) const;

    void collect(const std::string& prefix, ParamList& out) const;
};

/// Identity kernel: weight[o][i] has a single 1 at the centre when o == i.
Tensor centered_identity_kernel(Index channels, Index kernel, bool requires_grad = true);

} // namespace vqcnir
