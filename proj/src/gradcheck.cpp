#include "vqcnir/gradcheck.hpp"

#include "vqcnir/aiem.hpp"
#include "vqcnir/dbca.hpp"
#include "vqcnir/losses.hpp"
#include "vqcnir/model.hpp"
#include "vqcnir/ops.hpp"
#include "vqcnir/vq.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace vqcnir {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) {
        x = rng.uniform(lo, hi);
    }
    return Tensor::from(std::move(shape), std::move(v), true);
}

double objective(const Tensor& out, const std::vector<double>& r)
{
    long double acc = 0.0L;
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        acc += static_cast<long double>(d[i]) * r[i];
    }
    return static_cast<double>(acc);
}

/// Overwrites every parameter, including zero-initialised ones, with U(-scale, scale).
void randomize(const ParamList& params, Rng& rng, double scale)
{
    for (const auto& p : params) {
        Tensor t = p.tensor;
        for (double& x : t.mutable_data()) {
            x = rng.uniform(-scale, scale);
        }
    }
}

std::vector<Tensor> leaves_of(const ParamList& params)
{
    std::vector<Tensor> out;
    for (const auto& p : params) {
        out.push_back(p.tensor);
    }
    return out;
}

// Offsets whose fractional part stays away from the bilinear kinks.
Tensor smooth_offsets(Shape shape, Rng& rng)
{
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) {
        x = static_cast<double>(static_cast<int>(rng.below(3)) - 1) + rng.uniform(0.15, 0.85);
    }
    return Tensor::from(std::move(shape), std::move(v), true);
}

template <class M>
std::shared_ptr<M> hold(M m)
{
    return std::make_shared<M>(std::move(m));
}

GradcheckCase conv2d_case()
{
    return {"conv2d", [](int v, Rng& rng) {
                struct Spec {
                    Index b, cin, h, w, cout, k;
                    Conv2dOptions opt;
                };
                const Spec specs[] = {
                    {1, 2, 5, 6, 3, 3, {1, 1, 1, 1}},
                    {2, 4, 7, 5, 2, 3, {2, 1, 1, 2}},
                    {1, 3, 6, 6, 3, 3, {1, 2, 2, 3}},
                };
                const Spec& s = specs[v];
                Tensor x = random_tensor({s.b, s.cin, s.h, s.w}, rng);
                Tensor w = random_tensor({s.cout, s.cin / s.opt.groups, s.k, s.k}, rng);
                Tensor b = random_tensor({s.cout}, rng);
                return GradcheckProblem{{x, w, b}, [=] { return conv2d(x, w, b, s.opt); }};
            }};
}

GradcheckCase conv_transpose2d_case()
{
    return {"conv_transpose2d", [](int v, Rng& rng) {
                const Index cin = 2 + v, cout = 3 - v % 2, h = 3 + v;
                const Index k = v == 2 ? 3 : 4, stride = v == 0 ? 1 : 2, pad = 1;
                Tensor x = random_tensor({1 + v % 2, cin, h, h + 1}, rng);
                Tensor w = random_tensor({cin, cout, k, k}, rng);
                Tensor b = random_tensor({cout}, rng);
                return GradcheckProblem{{x, w, b},
                                        [=] { return conv_transpose2d(x, w, b, stride, pad); }};
            }};
}

GradcheckCase deform_case()
{
    return {"deform_conv2d", [](int v, Rng& rng) {
                const Index B = 1 + v % 2, C = 2 + v, O = 3 - v % 2, H = 4 + v, W = 5;
                const Index k = v == 1 ? 1 : 3;
                Tensor x = random_tensor({B, C, H, W}, rng);
                Tensor off = smooth_offsets({B, 2 * k * k, H, W}, rng);
                Tensor w = random_tensor({O, C, k, k}, rng);
                Tensor b = random_tensor({O}, rng);
                return GradcheckProblem{{x, off, w, b}, [=] { return deform_conv2d(x, off, w, b); }};
            }};
}

GradcheckCase layer_norm_case()
{
    return {"layer_norm", [](int v, Rng& rng) {
                const Index C = 1 + 2 * v;
                Tensor x = random_tensor({1 + v % 2, C, 3 + v, 4}, rng);
                Tensor g = random_tensor({C}, rng, 0.5, 1.5);
                Tensor b = random_tensor({C}, rng);
                return GradcheckProblem{{x, g, b}, [=] { return layer_norm(x, g, b); }};
            }};
}

GradcheckCase softmax_case()
{
    return {"softmax", [](int v, Rng& rng) {
                const Shape shapes[] = {{5}, {3, 4}, {2, 3, 5}};
                const int axes[] = {0, 0, -1};
                Tensor x = random_tensor(shapes[v], rng, -2.0, 2.0);
                const int axis = axes[v];
                return GradcheckProblem{{x}, [=] { return softmax(x, axis); }};
            }};
}

GradcheckCase matmul_case()
{
    return {"matmul", [](int v, Rng& rng) {
                Tensor a = v == 2 ? random_tensor({2, 3, 4}, rng) : random_tensor({2 + v, 3}, rng);
                Tensor b = v == 2 ? random_tensor({2, 4, 5}, rng) : random_tensor({3, 4 - v}, rng);
                return GradcheckProblem{{a, b}, [=] { return matmul(a, b); }};
            }};
}

GradcheckCase curve_map_case()
{
    return {"curve_map", [](int v, Rng& rng) {
                const Shape shape{1 + v % 2, 2 + v, 3, 3};
                Tensor x = random_tensor(shape, rng, -0.2, 1.2);
                CurveParams p;
                std::vector<Tensor> leaves{x};
                for (int n = 0; n < 1 + 2 * v; ++n) {
                    p.maps.push_back(random_tensor(shape, rng, 0.0, 1.0));
                    leaves.push_back(p.maps.back());
                }
                return GradcheckProblem{leaves, [=] { return curve_map(x, p); }};
            }};
}

GradcheckCase curve_estimate_case()
{
    return {"curve_estimate", [](int v, Rng& rng) {
                const Index comp = 2 + v, part = 1 + v % 2, order = 1 + v;
                auto est = hold(CurveEstimator::create(comp, part + 1, part, order, rng));
                ParamList params;
                est->collect("est", params);
                randomize(params, rng, 0.5);
                Tensor x = random_tensor({1, comp, 5, 4}, rng);
                auto leaves = leaves_of(params);
                leaves.push_back(x);
                return GradcheckProblem{leaves, [=] { return channel_concat((*est)(x).maps); }};
            }};
}

GradcheckCase imaconv_case()
{
    return {"imaconv_forward", [](int v, Rng& rng) {
                IMAConvConfig cfg;
                cfg.splits = 2 + v;
                cfg.in_channels = cfg.splits * (1 + v % 2);
                cfg.curve_order = 1 + v;
                auto m = hold(IMAConv::create(cfg, rng));
                ParamList params;
                m->collect("imaconv", params);
                randomize(params, rng, 0.5);
                Tensor x = random_tensor({1, cfg.in_channels, 4, 5}, rng, -0.2, 1.2);
                auto leaves = leaves_of(params);
                leaves.push_back(x);
                return GradcheckProblem{leaves, [=] { return (*m)(x); }};
            }};
}

GradcheckCase hie_case()
{
    return {"hie_forward", [](int v, Rng& rng) {
                const Index C = 2 + 2 * v;
                auto m = hold(HIE::create(HIEConfig{C, 2}, rng, false));
                ParamList params;
                m->collect("hie", params);
                randomize(params, rng, 0.5);
                Tensor x = random_tensor({1 + v % 2, C, 4 + v, 5}, rng);
                auto leaves = leaves_of(params);
                leaves.push_back(x);
                return GradcheckProblem{leaves, [=] { return (*m)(x); }};
            }};
}

GradcheckCase aiem_case()
{
    return {"aiem_forward", [](int v, Rng& rng) {
                AIEMConfig cfg;
                cfg.splits = 2;
                cfg.channels = 2 + 2 * v;
                cfg.curve_order = 1 + v;
                cfg.reduction = 2;
                auto m = hold(AIEM::create(cfg, rng, false));
                ParamList params;
                m->collect("aiem", params);
                randomize(params, rng, 0.5);
                Tensor x = random_tensor({1, cfg.channels, 4, 4 + v}, rng);
                auto leaves = leaves_of(params);
                leaves.push_back(x);
                return GradcheckProblem{leaves, [=] { return (*m)(x); }};
            }};
}

std::shared_ptr<DBCA> random_dbca(Index C, Rng& rng, double offset_scale, ParamList& params)
{
    auto m = hold(DBCA::create(DBCAConfig{C, 3, 7}, rng));
    m->collect("dbca", params);
    randomize(params, rng, 0.5);
    for (double& x : m->offset_conv.weight.mutable_data()) {
        x *= offset_scale;
    }
    return m;
}

GradcheckCase cross_attention_case()
{
    return {"bidirectional_cross_attention", [](int v, Rng& rng) {
                const Index C = 1 + 2 * v;
                ParamList params;
                auto m = random_dbca(C, rng, 1.0, params);
                Tensor fd = random_tensor({1 + v % 2, C, 3, 3 + v}, rng);
                Tensor fg = random_tensor(fd.shape(), rng);
                auto leaves = leaves_of(params);
                leaves.push_back(fd);
                leaves.push_back(fg);
                return GradcheckProblem{leaves, [=] {
                                            auto o = m->cross_attention(fd, fg);
                                            return channel_concat({o.fd_out, o.fg_out});
                                        }};
            }};
}

GradcheckCase offset_estimate_case()
{
    return {"offset_estimate", [](int v, Rng& rng) {
                const Index C = 1 + v;
                ParamList params;
                auto m = random_dbca(C, rng, 1.0, params);
                Tensor fd = random_tensor({1, C, 4 + v, 4}, rng);
                Tensor fg = random_tensor(fd.shape(), rng);
                std::vector<Tensor> leaves{m->offset_conv.weight, m->offset_conv.bias, fd, fg};
                return GradcheckProblem{leaves, [=] { return m->estimate_offsets(fd, fg); }};
            }};
}

GradcheckCase dbca_case()
{
    return {"dbca_forward", [](int v, Rng& rng) {
                const Index C = 2 + v;
                ParamList params;
                auto m = random_dbca(C, rng, 0.3, params);
                Tensor fd = random_tensor({1, C, 4, 4 + v}, rng);
                Tensor fg = random_tensor(fd.shape(), rng);
                auto leaves = leaves_of(params);
                leaves.push_back(fd);
                leaves.push_back(fg);
                return GradcheckProblem{leaves, [=] { return (*m)(fd, fg); }};
            }};
}

GradcheckCase pixel_loss_case()
{
    return {"pixel_loss", [](int v, Rng& rng) {
                Tensor a = random_tensor({1 + v, 3, 3 + v, 4}, rng);
                Tensor b = random_tensor(a.shape(), rng);
                return GradcheckProblem{{a, b}, [=] { return pixel_loss(a, b); }};
            }};
}

ModelConfig tiny_model(int v)
{
    ModelConfig cfg;
    cfg.base_channels = 2 + v;
    cfg.num_scales = 2;
    cfg.latent_dim = 3;
    cfg.codebook_size = 4;
    return cfg;
}

GradcheckCase perceptual_loss_case()
{
    return {"perceptual_loss", [](int v, Rng& rng) {
                const ModelConfig cfg = tiny_model(v);
                auto enc = hold(Encoder::create(cfg, rng));
                Tensor a = random_tensor({1, 3, 8, 4 * (2 + v % 2)}, rng, 0.0, 1.0);
                Tensor b = random_tensor(a.shape(), rng, 0.0, 1.0);
                return GradcheckProblem{{a, b}, [=] { return perceptual_loss(a, b, *enc); }};
            }};
}

std::shared_ptr<PatchDiscriminator> random_discriminator(int v, Rng& rng)
{
    auto d = hold(PatchDiscriminator::create(2 + v, rng));
    ParamList params;
    d->collect("disc", params);
    randomize(params, rng, 0.5);
    return d;
}

GradcheckCase generator_adv_case()
{
    return {"adversarial_loss_g", [](int v, Rng& rng) {
                auto d = random_discriminator(v, rng);
                Tensor x = random_tensor({1 + v % 2, 3, 16, 16 + 16 * (v / 2)}, rng, 0.0, 1.0);
                return GradcheckProblem{{x}, [=] { return generator_hinge_loss(*d, x); }};
            }};
}

GradcheckCase discriminator_adv_case()
{
    return {"adversarial_loss_d", [](int v, Rng& rng) {
                auto d = random_discriminator(v, rng);
                ParamList params;
                d->collect("disc", params);
                Tensor fake = random_tensor({1 + v % 2, 3, 16, 16}, rng, 0.0, 1.0);
                Tensor real = random_tensor(fake.shape(), rng, 0.0, 1.0);
                auto leaves = leaves_of(params);
                leaves.push_back(fake);
                leaves.push_back(real);
                return GradcheckProblem{
                    leaves, [=] { return discriminator_hinge_loss(*d, fake, real); }};
            }};
}

GradcheckCase codebook_loss_case()
{
    return {"codebook_learning_loss", [](int v, Rng& rng) {
                const Index K = 3 + v, nz = 2 + v;
                auto cb = std::make_shared<Codebook>();
                cb->entries = random_tensor({K, nz}, rng);
                Tensor z = random_tensor({1 + v % 2, nz, 3, 2 + v}, rng);
                // Stopped operands frozen at their unperturbed values.
                const Tensor z0 = z.detach();
                const QuantizationResult q0 = quantize(z0, *cb);
                const Tensor zq0 = q0.quantized;
                auto reference = [=] {
                    Codebook live{cb->entries};
                    return add(mse(z0, codebook_lookup(live, q0)), scale(mse(z, zq0), 0.25));
                };
                return GradcheckProblem{{z, cb->entries},
                                        [=] {
                                            auto q = quantize(z, *cb);
                                            return codebook_learning_loss(z, q, *cb, 0.25);
                                        },
                                        reference};
            }};
}

GradcheckCase code_alignment_case()
{
    return {"code_alignment_loss", [](int v, Rng& rng) {
                Tensor z = random_tensor({1 + v, 2 + v, 3, 3}, rng);
                Tensor zg = random_tensor(z.shape(), rng);
                return GradcheckProblem{{z}, [=] { return code_alignment_loss(z, zg); }};
            }};
}

GradcheckCase total_loss_case()
{
    return {"total_loss", [](int v, Rng& rng) {
                Tensor a = random_tensor({1}, rng), b = random_tensor({1}, rng);
                Tensor c = random_tensor({1}, rng), d = random_tensor({1}, rng);
                LossWeights w;
                if (v > 0) {
                    w = {rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
                }
                return GradcheckProblem{{a, b, c, d},
                                        [=] { return total_loss(LossParts<Tensor>{a, b, c, d}, w); }};
            }};
}

} // namespace

double gradcheck_problem(const GradcheckProblem& problem, Rng& rng, const GradcheckOptions& options)
{
    Tape::active().clear();
    for (Tensor t : problem.leaves) {
        t.clear_grad();
    }
    const Tensor out = problem.forward();
    std::vector<double> r(static_cast<std::size_t>(out.numel()));
    for (auto& x : r) {
        x = rng.normal();
    }
    backward(sum(mul(out, Tensor::from(out.shape(), r))));

    const auto& numeric_fn = problem.reference ? problem.reference : problem.forward;
    double worst = 0.0;
    for (Tensor leaf : problem.leaves) {
        const std::vector<double> analytic = leaf.has_grad()
                                                 ? std::vector<double>(leaf.grad().begin(), leaf.grad().end())
                                                 : std::vector<double>(static_cast<std::size_t>(leaf.numel()), 0.0);
        const auto n = static_cast<std::size_t>(leaf.numel());
        std::vector<std::size_t> coords;
        if (n <= options.samples_per_leaf) {
            for (std::size_t i = 0; i < n; ++i) {
                coords.push_back(i);
            }
        } else {
            for (std::size_t i = 0; i < options.samples_per_leaf; ++i) {
                coords.push_back(static_cast<std::size_t>(rng.below(n)));
            }
        }
        NoGradGuard guard;
        for (std::size_t i : coords) {
            double& slot = leaf.mutable_data()[i];
            const double saved = slot;
            slot = saved + options.step;
            const double plus = objective(numeric_fn(), r);
            slot = saved - options.step;
            const double minus = objective(numeric_fn(), r);
            slot = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double a = analytic[i];
            const double err =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
            worst = std::max(worst, err);
        }
        leaf.clear_grad();
    }
    return worst;
}

GradcheckResult run_gradcheck_case(const GradcheckCase& c, std::uint64_t seed,
                                   const GradcheckOptions& options)
{
    GradcheckResult res;
    res.op = c.op;
    res.variants = c.variants;
    for (int v = 0; v < c.variants; ++v) {
        Rng rng = Rng(seed).split(static_cast<std::uint64_t>(v));
        GradcheckProblem p = c.build(v, rng);
        res.max_rel_error = std::max(res.max_rel_error, gradcheck_problem(p, rng, options));
    }
    res.passed = res.max_rel_error < options.tolerance;
    return res;
}

std::vector<GradcheckCase> standard_gradcheck_cases()
{
    return {conv2d_case(),          conv_transpose2d_case(), deform_case(),
            layer_norm_case(),      softmax_case(),          matmul_case(),
            curve_map_case(),       curve_estimate_case(),   imaconv_case(),
            hie_case(),             aiem_case(),             cross_attention_case(),
            offset_estimate_case(), dbca_case(),             pixel_loss_case(),
            perceptual_loss_case(), generator_adv_case(),    discriminator_adv_case(),
            codebook_loss_case(),   code_alignment_case(),   total_loss_case()};
}

} // namespace vqcnir
