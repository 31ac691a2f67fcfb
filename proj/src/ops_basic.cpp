#include "vqcnir/ops.hpp"

#include "vqcnir/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vqcnir {

using autograd::grad_of;
using autograd::make_result;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

thread_local std::uint64_t g_softmax_calls = 0;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

void require_rank4(const Tensor& x, const char* op)
{
    if (x.rank() != 4) {
        throw DimensionError(std::string(op) + ": expected a 4-d [B,C,H,W] tensor, got " +
                             shape_str(x.shape()));
    }
}

// y = f(x) with dy/dx expressed through (x, y).
template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv)
{
    auto xs = x.data();
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = fwd(xs[i]);
    }
    auto xi = x.impl();
    return make_result(x.shape(), std::move(out), {&x}, [xi, deriv](const TensorImpl& o) {
        auto gx = grad_of(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            gx[i] += o.grad[i] * deriv(xi->data[i], o.data[i]);
        }
    });
}

} // namespace

Tensor sigmoid(const Tensor& x)
{
    return unary(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x)
{
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope)
{
    return unary(
        x, [slope](double v) { return v > 0.0 ? v : slope * v; },
        [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor clamp(const Tensor& x, double lo, double hi)
{
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return v >= lo && v <= hi ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x)
{
    return unary(
        x, [](double v) { return std::abs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor scale(const Tensor& x, double c)
{
    return unary(
        x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c)
{
    return unary(
        x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& x)
{
    return unary(
        x, [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Tensor stop_gradient(const Tensor& x) { return x.detach(); }

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    auto as = a.data();
    auto bs = b.data();
    std::vector<double> out(as.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = as[i] + bs[i];
    }
    auto ai = a.impl();
    auto bi = b.impl();
    return make_result(a.shape(), std::move(out), {&a, &b}, [ai, bi](const TensorImpl& o) {
        for (const auto& t : {ai, bi}) {
            auto g = grad_of(t);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += o.grad[i];
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    auto as = a.data();
    auto bs = b.data();
    std::vector<double> out(as.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = as[i] - bs[i];
    }
    auto ai = a.impl();
    auto bi = b.impl();
    return make_result(a.shape(), std::move(out), {&a, &b}, [ai, bi](const TensorImpl& o) {
        auto ga = grad_of(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] += o.grad[i];
        }
        auto gb = grad_of(bi);
        for (std::size_t i = 0; i < gb.size(); ++i) {
            gb[i] -= o.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    auto as = a.data();
    auto bs = b.data();
    std::vector<double> out(as.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = as[i] * bs[i];
    }
    auto ai = a.impl();
    auto bi = b.impl();
    return make_result(a.shape(), std::move(out), {&a, &b}, [ai, bi](const TensorImpl& o) {
        auto ga = grad_of(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] += o.grad[i] * bi->data[i];
        }
        auto gb = grad_of(bi);
        for (std::size_t i = 0; i < gb.size(); ++i) {
            gb[i] += o.grad[i] * ai->data[i];
        }
    });
}

Tensor mul_broadcast(const Tensor& x, const Tensor& s)
{
    const Shape& xs = x.shape();
    const Shape& ss = s.shape();
    if (xs.size() != ss.size()) {
        throw DimensionError("mul_broadcast: rank mismatch " + shape_str(xs) + " vs " +
                             shape_str(ss));
    }
    const std::size_t r = xs.size();
    // Stride of s along each axis of x (0 on broadcast axes).
    std::vector<Index> sstride(r, 0);
    Index acc = 1;
    for (std::size_t a = r; a-- > 0;) {
        if (ss[a] != xs[a] && ss[a] != 1) {
            throw DimensionError("mul_broadcast: axis " + std::to_string(a) + " extent " +
                                 std::to_string(ss[a]) + " cannot broadcast to " +
                                 std::to_string(xs[a]));
        }
        sstride[a] = ss[a] == 1 ? 0 : acc;
        acc *= ss[a];
    }
    const Index n = x.numel();
    std::vector<Index> sidx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        Index rem = i;
        Index off = 0;
        for (std::size_t a = r; a-- > 0;) {
            off += (rem % xs[a]) * sstride[a];
            rem /= xs[a];
        }
        sidx[static_cast<std::size_t>(i)] = off;
    }
    auto xd = x.data();
    auto sd = s.data();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = xd[i] * sd[static_cast<std::size_t>(sidx[i])];
    }
    auto xi = x.impl();
    auto si = s.impl();
    return make_result(xs, std::move(out), {&x, &s},
                       [xi, si, sidx = std::move(sidx)](const TensorImpl& o) {
                           auto gx = grad_of(xi);
                           for (std::size_t i = 0; i < gx.size(); ++i) {
                               gx[i] += o.grad[i] * si->data[static_cast<std::size_t>(sidx[i])];
                           }
                           auto gs = grad_of(si);
                           if (!gs.empty()) {
                               for (std::size_t i = 0; i < o.grad.size(); ++i) {
                                   gs[static_cast<std::size_t>(sidx[i])] +=
                                       o.grad[i] * xi->data[i];
                               }
                           }
                       });
}

Tensor sum(const Tensor& x)
{
    auto xd = x.data();
    double s = 0.0;
    for (double v : xd) {
        s += v;
    }
    auto xi = x.impl();
    return make_result({1}, {s}, {&x}, [xi](const TensorImpl& o) {
        auto g = grad_of(xi);
        for (double& v : g) {
            v += o.grad[0];
        }
    });
}

Tensor mean(const Tensor& x)
{
    const double n = static_cast<double>(x.numel());
    if (n == 0) {
        throw DimensionError("mean of an empty tensor");
    }
    auto xd = x.data();
    double s = 0.0;
    for (double v : xd) {
        s += v;
    }
    auto xi = x.impl();
    return make_result({1}, {s / n}, {&x}, [xi, n](const TensorImpl& o) {
        auto g = grad_of(xi);
        const double d = o.grad[0] / n;
        for (double& v : g) {
            v += d;
        }
    });
}

Tensor reshape(const Tensor& x, Shape shape)
{
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                             shape_str(shape));
    }
    auto xd = x.data();
    auto xi = x.impl();
    return make_result(std::move(shape), std::vector<double>(xd.begin(), xd.end()), {&x},
                       [xi](const TensorImpl& o) {
                           auto g = grad_of(xi);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               g[i] += o.grad[i];
                           }
                       });
}

Tensor transpose_last2(const Tensor& x)
{
    if (x.rank() < 2) {
        throw DimensionError("transpose_last2: rank < 2");
    }
    Shape s = x.shape();
    const std::size_t r = s.size();
    const Index rows = s[r - 2];
    const Index cols = s[r - 1];
    const Index batch = x.numel() / std::max<Index>(rows * cols, 1);
    std::swap(s[r - 2], s[r - 1]);
    auto xd = x.data();
    std::vector<double> out(xd.size());
    for (Index b = 0; b < batch; ++b) {
        const Index base = b * rows * cols;
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                out[static_cast<std::size_t>(base + j * rows + i)] =
                    xd[static_cast<std::size_t>(base + i * cols + j)];
            }
        }
    }
    auto xi = x.impl();
    return make_result(std::move(s), std::move(out), {&x},
                       [xi, batch, rows, cols](const TensorImpl& o) {
                           auto g = grad_of(xi);
                           for (Index b = 0; b < batch; ++b) {
                               const Index base = b * rows * cols;
                               for (Index i = 0; i < rows; ++i) {
                                   for (Index j = 0; j < cols; ++j) {
                                       g[static_cast<std::size_t>(base + i * cols + j)] +=
                                           o.grad[static_cast<std::size_t>(base + j * rows + i)];
                                   }
                               }
                           }
                       });
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    const bool batched = a.rank() == 3;
    if (!((a.rank() == 2 && b.rank() == 2) || (a.rank() == 3 && b.rank() == 3))) {
        throw DimensionError("matmul: expected two rank-2 or two rank-3 tensors, got " +
                             shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const Index batch = batched ? a.dim(0) : 1;
    if (batched && b.dim(0) != batch) {
        throw DimensionError("matmul: batch axis mismatch");
    }
    const std::size_t o = batched ? 1 : 0;
    const Index m = a.dim(o);
    const Index k = a.dim(o + 1);
    const Index n = b.dim(o + 1);
    if (b.dim(o) != k) {
        throw DimensionError("matmul: inner axis mismatch " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    std::vector<double> out(static_cast<std::size_t>(batch * m * n));
    for (Index i = 0; i < batch; ++i) {
        ConstMapMat am(a.data().data() + i * m * k, m, k);
        ConstMapMat bm(b.data().data() + i * k * n, k, n);
        MapMat om(out.data() + i * m * n, m, n);
        om.noalias() = am * bm;
    }
    Shape shape = batched ? Shape{batch, m, n} : Shape{m, n};
    auto ai = a.impl();
    auto bi = b.impl();
    return make_result(std::move(shape), std::move(out), {&a, &b},
                       [ai, bi, batch, m, k, n](const TensorImpl& res) {
                           auto ga = grad_of(ai);
                           auto gb = grad_of(bi);
                           for (Index i = 0; i < batch; ++i) {
                               ConstMapMat gm(res.grad.data() + i * m * n, m, n);
                               if (!ga.empty()) {
                                   ConstMapMat bm(bi->data.data() + i * k * n, k, n);
                                   MapMat gam(ga.data() + i * m * k, m, k);
                                   gam.noalias() += gm * bm.transpose();
                               }
                               if (!gb.empty()) {
                                   ConstMapMat am(ai->data.data() + i * m * k, m, k);
                                   MapMat gbm(gb.data() + i * k * n, k, n);
                                   gbm.noalias() += am.transpose() * gm;
                               }
                           }
                       });
}

Tensor softmax(const Tensor& input, int axis)
{
    ++g_softmax_calls;
    const Shape& s = input.shape();
    const int r = static_cast<int>(s.size());
    if (axis < 0) {
        axis += r;
    }
    if (axis < 0 || axis >= r) {
        throw DimensionError("softmax: axis out of range for shape " + shape_str(s));
    }
    Index outer = 1;
    Index inner = 1;
    for (int a = 0; a < axis; ++a) {
        outer *= s[static_cast<std::size_t>(a)];
    }
    for (int a = axis + 1; a < r; ++a) {
        inner *= s[static_cast<std::size_t>(a)];
    }
    const Index len = s[static_cast<std::size_t>(axis)];
    auto xd = input.data();
    std::vector<double> out(xd.size());
    for (Index o = 0; o < outer; ++o) {
        for (Index in = 0; in < inner; ++in) {
            const Index base = o * len * inner + in;
            double mx = -INFINITY;
            for (Index l = 0; l < len; ++l) {
                mx = std::max(mx, xd[static_cast<std::size_t>(base + l * inner)]);
            }
            double z = 0.0;
            for (Index l = 0; l < len; ++l) {
                const auto idx = static_cast<std::size_t>(base + l * inner);
                out[idx] = std::exp(xd[idx] - mx);
                z += out[idx];
            }
            for (Index l = 0; l < len; ++l) {
                out[static_cast<std::size_t>(base + l * inner)] /= z;
            }
        }
    }
    auto xi = input.impl();
    return make_result(s, std::move(out), {&input},
                       [xi, outer, inner, len](const TensorImpl& o) {
                           auto g = grad_of(xi);
                           for (Index ou = 0; ou < outer; ++ou) {
                               for (Index in = 0; in < inner; ++in) {
                                   const Index base = ou * len * inner + in;
                                   double dot = 0.0;
                                   for (Index l = 0; l < len; ++l) {
                                       const auto idx = static_cast<std::size_t>(base + l * inner);
                                       dot += o.grad[idx] * o.data[idx];
                                   }
                                   for (Index l = 0; l < len; ++l) {
                                       const auto idx = static_cast<std::size_t>(base + l * inner);
                                       g[idx] += o.data[idx] * (o.grad[idx] - dot);
                                   }
                               }
                           }
                       });
}

std::uint64_t softmax_call_count() { return g_softmax_calls; }

Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta, double eps)
{
    require_rank4(input, "layer_norm");
    if (!(eps > 0.0)) {
        throw ContractError("layer_norm: eps must be positive");
    }
    const Index B = input.dim(0);
    const Index C = input.dim(1);
    const Index HW = input.dim(2) * input.dim(3);
    if (gamma.numel() != C || beta.numel() != C) {
        throw DimensionError("layer_norm: affine parameters must have " + std::to_string(C) +
                             " entries (axis 1)");
    }
    const Index n = C * HW;
    auto xd = input.data();
    auto gd = gamma.data();
    auto bd = beta.data();
    std::vector<double> out(xd.size());
    std::vector<double> xhat(xd.size());
    std::vector<double> inv_std(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) {
        const double* x = xd.data() + b * n;
        const double shift = x[0];
        double mu = 0.0;
        for (Index i = 0; i < n; ++i) {
            mu += x[i] - shift;
        }
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double d = (x[i] - shift) - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(b)] = is;
        for (Index c = 0; c < C; ++c) {
            for (Index p = 0; p < HW; ++p) {
                const Index i = b * n + c * HW + p;
                const double h = ((xd[static_cast<std::size_t>(i)] - shift) - mu) * is;
                xhat[static_cast<std::size_t>(i)] = h;
                out[static_cast<std::size_t>(i)] = gd[static_cast<std::size_t>(c)] * h +
                                                   bd[static_cast<std::size_t>(c)];
            }
        }
    }
    auto xi = input.impl();
    auto gi = gamma.impl();
    auto bi = beta.impl();
    return make_result(
        input.shape(), std::move(out), {&input, &gamma, &beta},
        [xi, gi, bi, B, C, HW, n, xhat = std::move(xhat),
         inv_std = std::move(inv_std)](const TensorImpl& o) {
            auto gx = grad_of(xi);
            auto gg = grad_of(gi);
            auto gb = grad_of(bi);
            for (Index b = 0; b < B; ++b) {
                double mean_d = 0.0;
                double mean_dh = 0.0;
                for (Index c = 0; c < C; ++c) {
                    const double gam = gi->data[static_cast<std::size_t>(c)];
                    for (Index p = 0; p < HW; ++p) {
                        const auto i = static_cast<std::size_t>(b * n + c * HW + p);
                        const double dy = o.grad[i];
                        if (!gg.empty()) {
                            gg[static_cast<std::size_t>(c)] += dy * xhat[i];
                        }
                        if (!gb.empty()) {
                            gb[static_cast<std::size_t>(c)] += dy;
                        }
                        const double dh = dy * gam;
                        mean_d += dh;
                        mean_dh += dh * xhat[i];
                    }
                }
                if (gx.empty()) {
                    continue;
                }
                mean_d /= static_cast<double>(n);
                mean_dh /= static_cast<double>(n);
                const double is = inv_std[static_cast<std::size_t>(b)];
                for (Index c = 0; c < C; ++c) {
                    const double gam = gi->data[static_cast<std::size_t>(c)];
                    for (Index p = 0; p < HW; ++p) {
                        const auto i = static_cast<std::size_t>(b * n + c * HW + p);
                        const double dh = o.grad[i] * gam;
                        gx[i] += is * (dh - mean_d - xhat[i] * mean_dh);
                    }
                }
            }
        });
}

Tensor global_avg_pool(const Tensor& x)
{
    require_rank4(x, "global_avg_pool");
    const Index B = x.dim(0);
    const Index C = x.dim(1);
    const Index HW = x.dim(2) * x.dim(3);
    auto xd = x.data();
    std::vector<double> out(static_cast<std::size_t>(B * C));
    for (Index bc = 0; bc < B * C; ++bc) {
        double s = 0.0;
        for (Index p = 0; p < HW; ++p) {
            s += xd[static_cast<std::size_t>(bc * HW + p)];
        }
        out[static_cast<std::size_t>(bc)] = s / static_cast<double>(HW);
    }
    auto xi = x.impl();
    return make_result({B, C, 1, 1}, std::move(out), {&x}, [xi, HW](const TensorImpl& o) {
        auto g = grad_of(xi);
        for (std::size_t bc = 0; bc < o.grad.size(); ++bc) {
            const double d = o.grad[bc] / static_cast<double>(HW);
            for (Index p = 0; p < HW; ++p) {
                g[bc * static_cast<std::size_t>(HW) + static_cast<std::size_t>(p)] += d;
            }
        }
    });
}

std::vector<Tensor> channel_split(const Tensor& x, const std::vector<Index>& sizes)
{
    require_rank4(x, "channel_split");
    const Index B = x.dim(0);
    const Index C = x.dim(1);
    const Index HW = x.dim(2) * x.dim(3);
    if (std::accumulate(sizes.begin(), sizes.end(), Index{0}) != C) {
        throw DimensionError("channel_split: sizes do not add up to " + std::to_string(C) +
                             " channels (axis 1)");
    }
    std::vector<Tensor> parts;
    parts.reserve(sizes.size());
    auto xd = x.data();
    auto xi = x.impl();
    Index start = 0;
    for (Index len : sizes) {
        std::vector<double> out(static_cast<std::size_t>(B * len * HW));
        for (Index b = 0; b < B; ++b) {
            std::copy_n(xd.begin() + (b * C + start) * HW, len * HW,
                        out.begin() + b * len * HW);
        }
        parts.push_back(make_result({B, len, x.dim(2), x.dim(3)}, std::move(out), {&x},
                                    [xi, B, C, HW, start, len](const TensorImpl& o) {
                                        auto g = grad_of(xi);
                                        for (Index b = 0; b < B; ++b) {
                                            for (Index i = 0; i < len * HW; ++i) {
                                                g[static_cast<std::size_t>((b * C + start) * HW + i)] +=
                                                    o.grad[static_cast<std::size_t>(b * len * HW + i)];
                                            }
                                        }
                                    }));
        start += len;
    }
    return parts;
}

Tensor channel_concat(const std::vector<Tensor>& parts)
{
    if (parts.empty()) {
        throw DimensionError("channel_concat: no inputs");
    }
    for (const auto& p : parts) {
        require_rank4(p, "channel_concat");
    }
    const Index B = parts[0].dim(0);
    const Index H = parts[0].dim(2);
    const Index W = parts[0].dim(3);
    Index C = 0;
    for (const auto& p : parts) {
        if (p.dim(0) != B) {
            throw DimensionError("channel_concat: batch axis (0) mismatch");
        }
        if (p.dim(2) != H || p.dim(3) != W) {
            throw DimensionError("channel_concat: spatial axes (2,3) mismatch");
        }
        C += p.dim(1);
    }
    const Index HW = H * W;
    std::vector<double> out(static_cast<std::size_t>(B * C * HW));
    std::vector<std::shared_ptr<TensorImpl>> impls;
    std::vector<Index> starts;
    Index start = 0;
    for (const auto& p : parts) {
        const Index len = p.dim(1);
        auto pd = p.data();
        for (Index b = 0; b < B; ++b) {
            std::copy_n(pd.begin() + b * len * HW, len * HW, out.begin() + (b * C + start) * HW);
        }
        impls.push_back(p.impl());
        starts.push_back(start);
        start += len;
    }
    return make_result({B, C, H, W}, std::move(out), parts,
                       [impls, starts, B, C, HW](const TensorImpl& o) {
                           for (std::size_t k = 0; k < impls.size(); ++k) {
                               auto g = grad_of(impls[k]);
                               if (g.empty()) {
                                   continue;
                               }
                               const Index len = impls[k]->shape[1];
                               for (Index b = 0; b < B; ++b) {
                                   for (Index i = 0; i < len * HW; ++i) {
                                       g[static_cast<std::size_t>(b * len * HW + i)] +=
                                           o.grad[static_cast<std::size_t>((b * C + starts[k]) * HW + i)];
                                   }
                               }
                           }
                       });
}

Tensor nearest_upsample(const Tensor& x, Index factor)
{
    require_rank4(x, "nearest_upsample");
    if (factor < 1) {
        throw ContractError("nearest_upsample: factor must be >= 1");
    }
    const Index BC = x.dim(0) * x.dim(1);
    const Index H = x.dim(2);
    const Index W = x.dim(3);
    const Index Ho = H * factor;
    const Index Wo = W * factor;
    auto xd = x.data();
    std::vector<double> out(static_cast<std::size_t>(BC * Ho * Wo));
    for (Index bc = 0; bc < BC; ++bc) {
        for (Index y = 0; y < Ho; ++y) {
            for (Index xx = 0; xx < Wo; ++xx) {
                out[static_cast<std::size_t>((bc * Ho + y) * Wo + xx)] =
                    xd[static_cast<std::size_t>((bc * H + y / factor) * W + xx / factor)];
            }
        }
    }
    auto xi = x.impl();
    return make_result({x.dim(0), x.dim(1), Ho, Wo}, std::move(out), {&x},
                       [xi, BC, H, W, Ho, Wo, factor](const TensorImpl& o) {
                           auto g = grad_of(xi);
                           for (Index bc = 0; bc < BC; ++bc) {
                               for (Index y = 0; y < Ho; ++y) {
                                   for (Index xx = 0; xx < Wo; ++xx) {
                                       g[static_cast<std::size_t>((bc * H + y / factor) * W + xx / factor)] +=
                                           o.grad[static_cast<std::size_t>((bc * Ho + y) * Wo + xx)];
                                   }
                               }
                           }
                       });
}

} // namespace vqcnir
