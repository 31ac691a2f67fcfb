#pragma once

#include "vqcnir/rng.hpp"
#include "vqcnir/tensor.hpp"

#include <cstdint>
#include <vector>

namespace vqcnir {

/// K x n_z table of code vectors.
struct Codebook {
    Tensor entries; // [K, n_z]

    /// Entries drawn uniformly from [-1/K, 1/K].
    static Codebook create(Index codes, Index latent_dim, Rng& rng);

    Index size() const { return entries.defined() ? entries.dim(0) : 0; }
    Index dim() const { return entries.defined() ? entries.dim(1) : 0; }
};

struct QuantizationResult {
    Tensor quantized;           // [B, n_z, h, w], no gradient linkage
    std::vector<Index> indices; // row-major over (B, h, w)
    Index batch = 0;
    Index height = 0;
    Index width = 0;
};

/// Nearest code (squared Euclidean) per spatial position; ties go to the
/// lowest index.
QuantizationResult quantize(const Tensor& latent, const Codebook& codebook);

/// Gathers entries[indices] into [B, n_z, h, w]; gradients scatter back into
/// the codebook entries.
Tensor codebook_lookup(const Codebook& codebook, const QuantizationResult& result);

/// Forward value is `quantized` exactly; the backward pass hands the incoming
/// gradient to `latent` unchanged (pass-through estimator).
Tensor pass_through(const Tensor& latent, const Tensor& quantized);

/// mean((a - b)^2)
Tensor mse(const Tensor& a, const Tensor& b);

/// mean(|sg(z) - z_q|^2) + beta * mean(|z - sg(z_q)|^2). The first term
/// trains the codebook entries, the second commits the encoder.
Tensor codebook_learning_loss(const Tensor& latent, const QuantizationResult& result,
                              const Codebook& codebook, double beta_commit);

/// mean(|z_night - z_gt|^2); z_gt never receives gradient.
Tensor code_alignment_loss(const Tensor& z_night, const Tensor& z_gt);

/// Counts how often each code is selected between resets.
class CodeUsage {
public:
    explicit CodeUsage(Index codes) : counts_(static_cast<std::size_t>(codes), 0) {}

    void observe(const QuantizationResult& result);
    std::vector<Index> unused() const;
    void reset();
    std::uint64_t count(Index code) const { return counts_[static_cast<std::size_t>(code)]; }

private:
    std::vector<std::uint64_t> counts_;
};

/// Overwrites each listed code with a randomly chosen latent vector from `latent`.
void reseed_codes(Codebook& codebook, const std::vector<Index>& codes, const Tensor& latent,
                  Rng& rng);

} // namespace vqcnir
