#pragma once

#include "vqcnir/tensor.hpp"

#include <cstdint>
#include <vector>

namespace vqcnir {

struct Conv2dOptions {
    Index stride = 1;
    Index padding = 0;
    Index dilation = 1;
    Index groups = 1;
};

/// Cross-correlation with zero padding.
/// input [B,Cin,H,W], weight [Cout,Cin/groups,kh,kw], bias [Cout] or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& opt = {});

/// Adjoint of a strided conv2d. weight [Cin,Cout,kh,kw];
/// output extent (H-1)*stride - 2*padding + kh.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        Index stride, Index padding);

/// Deformable convolution (offsets only, one offset group), stride 1,
/// same-size output with padding (k-1)/2.
/// offset [B, 2*kh*kw, H, W]: channel 2t holds the row shift and 2t+1 the
/// column shift of kernel tap t = i*kw + j. Samples outside the image read 0.
Tensor deform_conv2d(const Tensor& input, const Tensor& offset, const Tensor& weight,
                     const Tensor& bias);

/// Per-sample normalisation over (C,H,W), then per-channel affine.
Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-6);

/// Max-shifted softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& input, int axis);
/// Number of softmax evaluations on this thread since start.
std::uint64_t softmax_call_count();

/// [M,K]x[K,N] or batched [B,M,K]x[B,K,N].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Swap the last two axes.
Tensor transpose_last2(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor abs(const Tensor& x);
/// Gradient passes only where lo <= x <= hi.
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// Elementwise product where every extent of `s` is 1 or equal to x's.
Tensor mul_broadcast(const Tensor& x, const Tensor& s);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
/// 1 - x
Tensor one_minus(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// [B,C,H,W] -> [B,C,1,1]
Tensor global_avg_pool(const Tensor& x);
std::vector<Tensor> channel_split(const Tensor& x, const std::vector<Index>& sizes);
Tensor channel_concat(const std::vector<Tensor>& parts);
Tensor nearest_upsample(const Tensor& x, Index factor);

/// Identity in the forward pass; blocks gradient flow.
Tensor stop_gradient(const Tensor& x);

} // namespace vqcnir
