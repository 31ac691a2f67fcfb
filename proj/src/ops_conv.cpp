#include "vqcnir/ops.hpp"

#include "vqcnir/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace vqcnir {

using autograd::grad_of;
using autograd::make_result;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

struct Geometry {
    Index channels, height, width;
    Index kh, kw;
    Index stride, pad, dil;
    Index out_h, out_w;

    Index rows() const { return channels * kh * kw; }
    Index cols() const { return out_h * out_w; }
    bool is_pointwise() const
    {
        return kh == 1 && kw == 1 && stride == 1 && pad == 0 && out_h == height && out_w == width;
    }
};

void im2col(const double* src, const Geometry& g, double* cols)
{
    for (Index c = 0; c < g.channels; ++c) {
        const double* plane = src + c * g.height * g.width;
        for (Index i = 0; i < g.kh; ++i) {
            for (Index j = 0; j < g.kw; ++j) {
                double* row = cols + ((c * g.kh + i) * g.kw + j) * g.cols();
                for (Index oy = 0; oy < g.out_h; ++oy) {
                    const Index y = oy * g.stride - g.pad + i * g.dil;
                    double* dst = row + oy * g.out_w;
                    if (y < 0 || y >= g.height) {
                        std::fill_n(dst, g.out_w, 0.0);
                        continue;
                    }
                    const double* line = plane + y * g.width;
                    for (Index ox = 0; ox < g.out_w; ++ox) {
                        const Index x = ox * g.stride - g.pad + j * g.dil;
                        dst[ox] = (x >= 0 && x < g.width) ? line[x] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im(const double* cols, const Geometry& g, double* dst)
{
    for (Index c = 0; c < g.channels; ++c) {
        double* plane = dst + c * g.height * g.width;
        for (Index i = 0; i < g.kh; ++i) {
            for (Index j = 0; j < g.kw; ++j) {
                const double* row = cols + ((c * g.kh + i) * g.kw + j) * g.cols();
                for (Index oy = 0; oy < g.out_h; ++oy) {
                    const Index y = oy * g.stride - g.pad + i * g.dil;
                    if (y < 0 || y >= g.height) {
                        continue;
                    }
                    double* line = plane + y * g.width;
                    const double* src = row + oy * g.out_w;
                    for (Index ox = 0; ox < g.out_w; ++ox) {
                        const Index x = ox * g.stride - g.pad + j * g.dil;
                        if (x >= 0 && x < g.width) {
                            line[x] += src[ox];
                        }
                    }
                }
            }
        }
    }
}

Index conv_out_extent(Index in, Index k, Index stride, Index pad, Index dil, const char* axis)
{
    const Index span = in + 2 * pad - dil * (k - 1) - 1;
    if (span < 0) {
        throw DimensionError(std::string("conv2d: kernel larger than padded input along ") + axis);
    }
    return span / stride + 1;
}

void add_bias(std::vector<double>& out, const Tensor& bias, Index B, Index C, Index HW)
{
    if (!bias.defined()) {
        return;
    }
    if (bias.numel() != C) {
        throw DimensionError("bias must have " + std::to_string(C) + " entries (axis 1)");
    }
    auto bd = bias.data();
    for (Index b = 0; b < B; ++b) {
        for (Index c = 0; c < C; ++c) {
            double* p = out.data() + (b * C + c) * HW;
            const double v = bd[static_cast<std::size_t>(c)];
            for (Index i = 0; i < HW; ++i) {
                p[i] += v;
            }
        }
    }
}

void accumulate_bias_grad(const std::shared_ptr<TensorImpl>& bias, const TensorImpl& o, Index B,
                          Index C, Index HW)
{
    if (!bias) {
        return;
    }
    auto gb = grad_of(bias);
    if (gb.empty()) {
        return;
    }
    for (Index b = 0; b < B; ++b) {
        for (Index c = 0; c < C; ++c) {
            const double* p = o.grad.data() + (b * C + c) * HW;
            double s = 0.0;
            for (Index i = 0; i < HW; ++i) {
                s += p[i];
            }
            gb[static_cast<std::size_t>(c)] += s;
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& opt)
{
    if (input.rank() != 4 || weight.rank() != 4) {
        throw DimensionError("conv2d: input and weight must be 4-d, got " +
                             shape_str(input.shape()) + " and " + shape_str(weight.shape()));
    }
    if (opt.groups < 1 || opt.stride < 1 || opt.dilation < 1 || opt.padding < 0) {
        throw ConfigError("conv2d: invalid stride/padding/dilation/groups");
    }
    const Index B = input.dim(0);
    const Index Cin = input.dim(1);
    const Index H = input.dim(2);
    const Index W = input.dim(3);
    const Index Cout = weight.dim(0);
    const Index G = opt.groups;
    if (Cin % G != 0) {
        throw ConfigError("conv2d: groups=" + std::to_string(G) + " does not divide Cin=" +
                          std::to_string(Cin));
    }
    if (Cout % G != 0) {
        throw ConfigError("conv2d: groups=" + std::to_string(G) + " does not divide Cout=" +
                          std::to_string(Cout));
    }
    const Index cg = Cin / G;
    const Index og = Cout / G;
    if (weight.dim(1) != cg) {
        throw DimensionError("conv2d: weight axis 1 is " + std::to_string(weight.dim(1)) +
                             ", expected Cin/groups=" + std::to_string(cg));
    }
    Geometry geo{cg, H, W, weight.dim(2), weight.dim(3), opt.stride, opt.padding, opt.dilation,
                 0, 0};
    geo.out_h = conv_out_extent(H, geo.kh, opt.stride, opt.padding, opt.dilation, "axis 2 (H)");
    geo.out_w = conv_out_extent(W, geo.kw, opt.stride, opt.padding, opt.dilation, "axis 3 (W)");
    const Index HWo = geo.cols();
    const Index krows = geo.rows();
    const bool pointwise = geo.is_pointwise();

    std::vector<double> out(static_cast<std::size_t>(B * Cout * HWo));
    std::vector<double> cols(pointwise ? 0 : static_cast<std::size_t>(krows * HWo));
    auto xd = input.data();
    auto wd = weight.data();
    for (Index b = 0; b < B; ++b) {
        for (Index g = 0; g < G; ++g) {
            const double* xg = xd.data() + (b * Cin + g * cg) * H * W;
            const double* cp = xg;
            if (!pointwise) {
                im2col(xg, geo, cols.data());
                cp = cols.data();
            }
            ConstMapMat cm(cp, krows, HWo);
            ConstMapMat wm(wd.data() + g * og * krows, og, krows);
            MapMat om(out.data() + (b * Cout + g * og) * HWo, og, HWo);
            om.noalias() = wm * cm;
        }
    }
    add_bias(out, bias, B, Cout, HWo);

    auto xi = input.impl();
    auto wi = weight.impl();
    auto bi = bias.defined() ? bias.impl() : nullptr;
    return make_result(
        {B, Cout, geo.out_h, geo.out_w}, std::move(out), {&input, &weight, &bias},
        [xi, wi, bi, geo, B, Cin, Cout, G, cg, og, H, W, pointwise](const TensorImpl& o) {
            const Index HWo = geo.cols();
            const Index krows = geo.rows();
            auto gx = grad_of(xi);
            auto gw = grad_of(wi);
            std::vector<double> cols(pointwise ? 0 : static_cast<std::size_t>(krows * HWo));
            std::vector<double> dcols(pointwise ? 0 : static_cast<std::size_t>(krows * HWo));
            for (Index b = 0; b < B; ++b) {
                for (Index g = 0; g < G; ++g) {
                    const double* xg = xi->data.data() + (b * Cin + g * cg) * H * W;
                    ConstMapMat dom(o.grad.data() + (b * Cout + g * og) * HWo, og, HWo);
                    ConstMapMat wm(wi->data.data() + g * og * krows, og, krows);
                    if (!gw.empty()) {
                        const double* cp = xg;
                        if (!pointwise) {
                            im2col(xg, geo, cols.data());
                            cp = cols.data();
                        }
                        ConstMapMat cm(cp, krows, HWo);
                        MapMat gwm(gw.data() + g * og * krows, og, krows);
                        gwm.noalias() += dom * cm.transpose();
                    }
                    if (!gx.empty()) {
                        double* gxg = gx.data() + (b * Cin + g * cg) * H * W;
                        if (pointwise) {
                            MapMat gxm(gxg, krows, HWo);
                            gxm.noalias() += wm.transpose() * dom;
                        } else {
                            MapMat dcm(dcols.data(), krows, HWo);
                            dcm.noalias() = wm.transpose() * dom;
                            col2im(dcols.data(), geo, gxg);
                        }
                    }
                }
            }
            accumulate_bias_grad(bi, o, B, Cout, HWo);
        });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        Index stride, Index padding)
{
    if (input.rank() != 4 || weight.rank() != 4) {
        throw DimensionError("conv_transpose2d: input and weight must be 4-d");
    }
    if (stride < 1 || padding < 0) {
        throw ConfigError("conv_transpose2d: invalid stride/padding");
    }
    const Index B = input.dim(0);
    const Index Cin = input.dim(1);
    const Index H = input.dim(2);
    const Index W = input.dim(3);
    if (weight.dim(0) != Cin) {
        throw DimensionError("conv_transpose2d: weight axis 0 must equal input channels (axis 1)");
    }
    const Index Cout = weight.dim(1);
    const Index kh = weight.dim(2);
    const Index kw = weight.dim(3);
    const Index Ho = (H - 1) * stride - 2 * padding + kh;
    const Index Wo = (W - 1) * stride - 2 * padding + kw;
    if (Ho < 1 || Wo < 1) {
        throw DimensionError("conv_transpose2d: empty output");
    }
    // The output plays the role of the input of the adjoint convolution.
    Geometry geo{Cout, Ho, Wo, kh, kw, stride, padding, 1, H, W};
    const Index krows = geo.rows();
    const Index HWi = H * W;
    std::vector<double> out(static_cast<std::size_t>(B * Cout * Ho * Wo), 0.0);
    std::vector<double> cols(static_cast<std::size_t>(krows * HWi));
    auto xd = input.data();
    ConstMapMat wm(weight.data().data(), Cin, krows);
    for (Index b = 0; b < B; ++b) {
        ConstMapMat xm(xd.data() + b * Cin * HWi, Cin, HWi);
        MapMat cm(cols.data(), krows, HWi);
        cm.noalias() = wm.transpose() * xm;
        col2im(cols.data(), geo, out.data() + b * Cout * Ho * Wo);
    }
    add_bias(out, bias, B, Cout, Ho * Wo);

    auto xi = input.impl();
    auto wi = weight.impl();
    auto bi = bias.defined() ? bias.impl() : nullptr;
    return make_result({B, Cout, Ho, Wo}, std::move(out), {&input, &weight, &bias},
                       [xi, wi, bi, geo, B, Cin, Cout, HWi](const TensorImpl& o) {
                           const Index krows = geo.rows();
                           const Index HWo = geo.height * geo.width;
                           auto gx = grad_of(xi);
                           auto gw = grad_of(wi);
                           std::vector<double> cols(static_cast<std::size_t>(krows * HWi));
                           ConstMapMat wm(wi->data.data(), Cin, krows);
                           for (Index b = 0; b < B; ++b) {
                               im2col(o.grad.data() + b * Cout * HWo, geo, cols.data());
                               ConstMapMat cm(cols.data(), krows, HWi);
                               if (!gx.empty()) {
                                   MapMat gxm(gx.data() + b * Cin * HWi, Cin, HWi);
                                   gxm.noalias() += wm * cm;
                               }
                               if (!gw.empty()) {
                                   ConstMapMat xm(xi->data.data() + b * Cin * HWi, Cin, HWi);
                                   MapMat gwm(gw.data(), Cin, krows);
                                   gwm.noalias() += xm * cm.transpose();
                               }
                           }
                           accumulate_bias_grad(bi, o, B, Cout, HWo);
                       });
}

namespace {

struct BilinearTap {
    Index y0, x0;
    double ly, lx;
};

inline double pixel_or_zero(const double* plane, Index H, Index W, Index y, Index x)
{
    return (y >= 0 && y < H && x >= 0 && x < W) ? plane[y * W + x] : 0.0;
}

inline double bilinear(const double* plane, Index H, Index W, const BilinearTap& t)
{
    const double v00 = pixel_or_zero(plane, H, W, t.y0, t.x0);
    const double v01 = pixel_or_zero(plane, H, W, t.y0, t.x0 + 1);
    const double v10 = pixel_or_zero(plane, H, W, t.y0 + 1, t.x0);
    const double v11 = pixel_or_zero(plane, H, W, t.y0 + 1, t.x0 + 1);
    return (1.0 - t.ly) * ((1.0 - t.lx) * v00 + t.lx * v01) + t.ly * ((1.0 - t.lx) * v10 + t.lx * v11);
}

void fill_deform_cols(const double* xb, const BilinearTap* grid_b, Index C, Index taps, Index H,
                      Index W, double* cols)
{
    const Index HW = H * W;
    for (Index c = 0; c < C; ++c) {
        const double* plane = xb + c * HW;
        for (Index t = 0; t < taps; ++t) {
            double* row = cols + (c * taps + t) * HW;
            const BilinearTap* g = grid_b + t * HW;
            for (Index p = 0; p < HW; ++p) {
                row[p] = bilinear(plane, H, W, g[p]);
            }
        }
    }
}

inline BilinearTap make_tap(double y, double x)
{
    const double fy = std::floor(y);
    const double fx = std::floor(x);
    return {static_cast<Index>(fy), static_cast<Index>(fx), y - fy, x - fx};
}

} // namespace

Tensor deform_conv2d(const Tensor& input, const Tensor& offset, const Tensor& weight,
                     const Tensor& bias)
{
    if (input.rank() != 4 || weight.rank() != 4 || offset.rank() != 4) {
        throw DimensionError("deform_conv2d: input, offset and weight must be 4-d");
    }
    const Index B = input.dim(0);
    const Index C = input.dim(1);
    const Index H = input.dim(2);
    const Index W = input.dim(3);
    const Index Cout = weight.dim(0);
    const Index kh = weight.dim(2);
    const Index kw = weight.dim(3);
    if (weight.dim(1) != C) {
        throw DimensionError("deform_conv2d: weight axis 1 must equal input channels");
    }
    if (kh % 2 == 0 || kw % 2 == 0) {
        throw ConfigError("deform_conv2d: kernel extents must be odd for same-size output");
    }
    const Index taps = kh * kw;
    if (offset.dim(0) != B) {
        throw DimensionError("deform_conv2d: offset axis 0 (batch) mismatch");
    }
    if (offset.dim(1) != 2 * taps) {
        throw DimensionError("deform_conv2d: offset axis 1 has " + std::to_string(offset.dim(1)) +
                             " channels, expected 2*kh*kw=" + std::to_string(2 * taps));
    }
    if (offset.dim(2) != H || offset.dim(3) != W) {
        throw DimensionError("deform_conv2d: offset spatial axes (2,3) must match input");
    }
    const Index ph = (kh - 1) / 2;
    const Index pw = (kw - 1) / 2;
    const Index HW = H * W;
    const Index krows = C * taps;

    auto xd = input.data();
    auto od = offset.data();
    // Sampling positions depend only on (b, tap, pixel); shared by all channels.
    std::vector<BilinearTap> grid(static_cast<std::size_t>(B * taps * HW));
    for (Index b = 0; b < B; ++b) {
        for (Index t = 0; t < taps; ++t) {
            const Index i = t / kw;
            const Index j = t % kw;
            const double* dy = od.data() + (b * 2 * taps + 2 * t) * HW;
            const double* dx = dy + HW;
            for (Index p = 0; p < HW; ++p) {
                const Index h = p / W;
                const Index w = p % W;
                grid[static_cast<std::size_t>((b * taps + t) * HW + p)] =
                    make_tap(static_cast<double>(h - ph + i) + dy[p],
                             static_cast<double>(w - pw + j) + dx[p]);
            }
        }
    }


    std::vector<double> out(static_cast<std::size_t>(B * Cout * HW));
    std::vector<double> cols(static_cast<std::size_t>(krows * HW));
    ConstMapMat wm(weight.data().data(), Cout, krows);
    for (Index b = 0; b < B; ++b) {
        fill_deform_cols(xd.data() + b * C * HW, grid.data() + b * taps * HW, C, taps, H, W,
                         cols.data());
        ConstMapMat cm(cols.data(), krows, HW);
        MapMat om(out.data() + b * Cout * HW, Cout, HW);
        om.noalias() = wm * cm;
    }
    add_bias(out, bias, B, Cout, HW);

    auto xi = input.impl();
    auto oi = offset.impl();
    auto wi = weight.impl();
    auto bi = bias.defined() ? bias.impl() : nullptr;
    return make_result(
        {B, Cout, H, W}, std::move(out), {&input, &offset, &weight, &bias},
        [xi, oi, wi, bi, grid = std::move(grid), B, C, H, W, HW, Cout, taps,
         krows](const TensorImpl& o) {
            auto gx = grad_of(xi);
            auto go = grad_of(oi);
            auto gw = grad_of(wi);
            std::vector<double> cols(static_cast<std::size_t>(krows * HW));
            std::vector<double> dcols(static_cast<std::size_t>(krows * HW));
            ConstMapMat wm(wi->data.data(), Cout, krows);
            for (Index b = 0; b < B; ++b) {
                ConstMapMat dom(o.grad.data() + b * Cout * HW, Cout, HW);
                const double* xb = xi->data.data() + b * C * HW;
                if (!gw.empty()) {
                    fill_deform_cols(xb, grid.data() + b * taps * HW, C, taps, H, W, cols.data());
                    ConstMapMat cm(cols.data(), krows, HW);
                    MapMat gwm(gw.data(), Cout, krows);
                    gwm.noalias() += dom * cm.transpose();
                }
                if (gx.empty() && go.empty()) {
                    continue;
                }
                MapMat dcm(dcols.data(), krows, HW);
                dcm.noalias() = wm.transpose() * dom;
                for (Index c = 0; c < C; ++c) {
                    const double* plane = xb + c * HW;
                    double* gplane = gx.empty() ? nullptr : gx.data() + (b * C + c) * HW;
                    for (Index t = 0; t < taps; ++t) {
                        const double* drow = dcols.data() + (c * taps + t) * HW;
                        const BilinearTap* g = grid.data() + (b * taps + t) * HW;
                        double* gdy = go.empty() ? nullptr : go.data() + (b * 2 * taps + 2 * t) * HW;
                        double* gdx = gdy ? gdy + HW : nullptr;
                        for (Index p = 0; p < HW; ++p) {
                            const double d = drow[p];
                            if (d == 0.0) {
                                continue;
                            }
                            const BilinearTap& tp = g[p];
                            if (gplane) {
                                const double w00 = (1.0 - tp.ly) * (1.0 - tp.lx);
                                const double w01 = (1.0 - tp.ly) * tp.lx;
                                const double w10 = tp.ly * (1.0 - tp.lx);
                                const double w11 = tp.ly * tp.lx;
                                const Index cy[4] = {tp.y0, tp.y0, tp.y0 + 1, tp.y0 + 1};
                                const Index cx[4] = {tp.x0, tp.x0 + 1, tp.x0, tp.x0 + 1};
                                const double cw[4] = {w00, w01, w10, w11};
                                for (int k = 0; k < 4; ++k) {
                                    if (cy[k] >= 0 && cy[k] < H && cx[k] >= 0 && cx[k] < W) {
                                        gplane[cy[k] * W + cx[k]] += d * cw[k];
                                    }
                                }
                            }
                            if (gdy) {
                                const double v00 = pixel_or_zero(plane, H, W, tp.y0, tp.x0);
                                const double v01 = pixel_or_zero(plane, H, W, tp.y0, tp.x0 + 1);
                                const double v10 = pixel_or_zero(plane, H, W, tp.y0 + 1, tp.x0);
                                const double v11 = pixel_or_zero(plane, H, W, tp.y0 + 1, tp.x0 + 1);
                                gdy[p] += d * ((1.0 - tp.lx) * (v10 - v00) + tp.lx * (v11 - v01));
                                gdx[p] += d * ((1.0 - tp.ly) * (v01 - v00) + tp.ly * (v11 - v10));
                            }
                        }
                    }
                }
            }
            accumulate_bias_grad(bi, o, B, Cout, HW);
        });
}

} // namespace vqcnir
