#include "vqcnir/vq.hpp"

#include "vqcnir/errors.hpp"
#include "vqcnir/ops.hpp"

#include <limits>

namespace vqcnir {

using autograd::grad_of;
using autograd::make_result;

Codebook Codebook::create(Index codes, Index latent_dim, Rng& rng)
{
    if (codes < 1 || latent_dim < 1) {
        throw ConfigError("codebook needs K >= 1 and n_z >= 1");
    }
    Codebook cb;
    cb.entries = Tensor::zeros({codes, latent_dim}, true);
    const double bound = 1.0 / static_cast<double>(codes);
    for (double& v : cb.entries.mutable_data()) {
        v = rng.uniform(-bound, bound);
    }
    return cb;
}

QuantizationResult quantize(const Tensor& latent, const Codebook& codebook)
{
    if (codebook.size() < 1) {
        throw ConfigError("quantize: empty codebook");
    }
    if (latent.rank() != 4) {
        throw DimensionError("quantize: latent must be [B,n_z,h,w], got " +
                             shape_str(latent.shape()));
    }
    const Index K = codebook.size();
    const Index nz = codebook.dim();
    if (latent.dim(1) != nz) {
        throw DimensionError("quantize: latent axis 1 has " + std::to_string(latent.dim(1)) +
                             " channels, codebook n_z is " + std::to_string(nz));
    }
    QuantizationResult r;
    r.batch = latent.dim(0);
    r.height = latent.dim(2);
    r.width = latent.dim(3);
    const Index hw = r.height * r.width;
    r.indices.resize(static_cast<std::size_t>(r.batch * hw));
    auto z = latent.data();
    auto e = codebook.entries.data();
    std::vector<double> out(z.size());
    std::vector<double> vec(static_cast<std::size_t>(nz));
    for (Index b = 0; b < r.batch; ++b) {
        for (Index p = 0; p < hw; ++p) {
            for (Index c = 0; c < nz; ++c) {
                vec[static_cast<std::size_t>(c)] = z[static_cast<std::size_t>((b * nz + c) * hw + p)];
            }
            Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Index k = 0; k < K; ++k) {
                const double* ek = e.data() + k * nz;
                double d = 0.0;
                for (Index c = 0; c < nz; ++c) {
                    const double diff = vec[static_cast<std::size_t>(c)] - ek[c];
                    d += diff * diff;
                }
                if (d < best_d) { // strict: earlier index wins ties
                    best_d = d;
                    best = k;
                }
            }
            r.indices[static_cast<std::size_t>(b * hw + p)] = best;
            for (Index c = 0; c < nz; ++c) {
                out[static_cast<std::size_t>((b * nz + c) * hw + p)] = e[static_cast<std::size_t>(best * nz + c)];
            }
        }
    }
    r.quantized = Tensor::from(latent.shape(), std::move(out));
    return r;
}

Tensor codebook_lookup(const Codebook& codebook, const QuantizationResult& result)
{
    const Index nz = codebook.dim();
    const Index hw = result.height * result.width;
    auto e = codebook.entries.data();
    std::vector<double> out(static_cast<std::size_t>(result.batch * nz * hw));
    for (Index b = 0; b < result.batch; ++b) {
        for (Index p = 0; p < hw; ++p) {
            const Index k = result.indices[static_cast<std::size_t>(b * hw + p)];
            for (Index c = 0; c < nz; ++c) {
                out[static_cast<std::size_t>((b * nz + c) * hw + p)] = e[static_cast<std::size_t>(k * nz + c)];
            }
        }
    }
    auto ei = codebook.entries.impl();
    auto indices = result.indices;
    const Index B = result.batch;
    return make_result({B, nz, result.height, result.width}, std::move(out), {&codebook.entries},
                       [ei, indices = std::move(indices), B, nz, hw](const TensorImpl& o) {
                           auto g = grad_of(ei);
                           for (Index b = 0; b < B; ++b) {
                               for (Index p = 0; p < hw; ++p) {
                                   const Index k = indices[static_cast<std::size_t>(b * hw + p)];
                                   for (Index c = 0; c < nz; ++c) {
                                       g[static_cast<std::size_t>(k * nz + c)] +=
                                           o.grad[static_cast<std::size_t>((b * nz + c) * hw + p)];
                                   }
                               }
                           }
                       });
}

Tensor pass_through(const Tensor& latent, const Tensor& quantized)
{
    if (latent.shape() != quantized.shape()) {
        throw DimensionError("pass_through: latent " + shape_str(latent.shape()) +
                             " vs quantized " + shape_str(quantized.shape()));
    }
    auto q = quantized.data();
    auto li = latent.impl();
    return make_result(latent.shape(), std::vector<double>(q.begin(), q.end()), {&latent},
                       [li](const TensorImpl& o) {
                           auto g = grad_of(li);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               g[i] += o.grad[i];
                           }
                       });
}

Tensor mse(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        throw DimensionError("mse: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    Tensor d = sub(a, b);
    return mean(mul(d, d));
}

Tensor codebook_learning_loss(const Tensor& latent, const QuantizationResult& result,
                              const Codebook& codebook, double beta_commit)
{
    Tensor zq = codebook_lookup(codebook, result);
    Tensor codebook_term = mse(stop_gradient(latent), zq);
    Tensor commit_term = mse(latent, stop_gradient(zq));
    return add(codebook_term, scale(commit_term, beta_commit));
}

Tensor code_alignment_loss(const Tensor& z_night, const Tensor& z_gt)
{
    if (z_night.shape() != z_gt.shape()) {
        throw DimensionError("code_alignment_loss: shape mismatch " +
                             shape_str(z_night.shape()) + " vs " + shape_str(z_gt.shape()));
    }
    return mse(z_night, stop_gradient(z_gt));
}

void CodeUsage::observe(const QuantizationResult& result)
{
    for (Index k : result.indices) {
        ++counts_[static_cast<std::size_t>(k)];
    }
}

std::vector<Index> CodeUsage::unused() const
{
    std::vector<Index> out;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        if (counts_[k] == 0) {
            out.push_back(static_cast<Index>(k));
        }
    }
    return out;
}

void CodeUsage::reset() { std::fill(counts_.begin(), counts_.end(), 0); }

void reseed_codes(Codebook& codebook, const std::vector<Index>& codes, const Tensor& latent,
                  Rng& rng)
{
    if (codes.empty()) {
        return;
    }
    const Index nz = codebook.dim();
    if (latent.rank() != 4 || latent.dim(1) != nz) {
        throw DimensionError("reseed_codes: latent channels must equal n_z");
    }
    const Index B = latent.dim(0);
    const Index hw = latent.dim(2) * latent.dim(3);
    auto z = latent.data();
    auto e = codebook.entries.mutable_data();
    for (Index k : codes) {
        const auto pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(B * hw)));
        const Index b = pick / hw;
        const Index p = pick % hw;
        for (Index c = 0; c < nz; ++c) {
            e[static_cast<std::size_t>(k * nz + c)] = z[static_cast<std::size_t>((b * nz + c) * hw + p)];
        }
    }
}

} // namespace vqcnir
