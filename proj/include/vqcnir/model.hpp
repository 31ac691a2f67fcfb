#pragma once

#include "vqcnir/aiem.hpp"
#include "vqcnir/dbca.hpp"
#include "vqcnir/nn.hpp"
#include "vqcnir/vq.hpp"

#include <cstdint>
#include <vector>

namespace vqcnir {

struct ModelConfig {
    Index base_channels = 16;
    Index num_scales = 3;
    Index aiem_blocks = 2;
    Index codebook_size = 256; // K
    Index latent_dim = 64;     // n_z
    Index dbca_kernel = 3;
    Index curve_splits = 4; // S
    Index curve_order = 4;  // N
    Index ca_reduction = 4;
    std::uint64_t seed = 0;

    // Ablation switches; disabled modules become identity pass-throughs.
    bool use_aiem = true;
    bool use_dbca = true;
    bool use_decoder_d = true;

    /// Feature width at resolution level l (0 = full resolution).
    Index channels_at(Index level) const;
    Index downsample_factor() const { return Index{1} << num_scales; }
    void validate() const;
};

struct EncoderOutput {
    Tensor latent;
    std::vector<Tensor> skips; // skips[l] at level l = 0..num_scales
};

/// Conv stem, then per level a residual block and a stride-2 conv, ending in a
/// 1x1 projection to n_z channels.
struct Encoder {
    Conv2d stem;
    std::vector<ResBlock> blocks; // num_scales + 1
    std::vector<Conv2d> downs;    // num_scales
    Conv2d to_latent;

    static Encoder create(const ModelConfig& config, Rng& rng);
    EncoderOutput operator()(const Tensor& image) const;
    /// Outputs of the num_scales downsampling stages (levels 1..num_scales).
    std::vector<Tensor> stage_features(const Tensor& image) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

struct DecoderOutput {
    Tensor image;
    std::vector<Tensor> features; // features[l] at level l = 0..num_scales
};

/// Mirror of the encoder with transposed-conv upsampling.
struct DecoderG {
    Conv2d from_latent;
    std::vector<ResBlock> blocks; // index = level
    std::vector<ConvTranspose2d> ups; // ups[l] maps level l+1 -> l
    Conv2d head;

    static DecoderG create(const ModelConfig& config, Rng& rng);
    DecoderOutput operator()(const Tensor& quantized) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Restoration decoder: G's layout plus encoder skips and one DBCA fusion per
/// level against the co-resolution prior feature.
struct DecoderD {
    Conv2d from_latent;
    std::vector<ResBlock> blocks;
    std::vector<ConvTranspose2d> ups;
    std::vector<DBCA> fusions; // index = level
    Conv2d head;

    static DecoderD create(const ModelConfig& config, Rng& rng);
    Tensor operator()(const Tensor& latent, const std::vector<Tensor>& skips,
                      const std::vector<Tensor>& prior, bool use_dbca) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Four stride-2 4x4 convolutions with leaky-relu 0.2, emitting a logit map.
/// The last layer starts at zero.
struct PatchDiscriminator {
    std::vector<Conv2d> layers;

    static PatchDiscriminator create(Index base_channels, Rng& rng);
    Tensor operator()(const Tensor& image) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

struct RestorationOutput {
    Tensor restored;
    Tensor latent; // z_e after the AIEM stack
    QuantizationResult quantization;
};

/// Full restoration network plus the stage-1 prior it builds on.
///
/// Stage 1 trains {hq_encoder, codebook, decoder_g}. Stage 2 freezes those
/// and trains {encoder, aiem, decoder_d} against a patch discriminator.
struct VQCNIRModel {
    ModelConfig config;
    Encoder hq_encoder;
    Codebook codebook;
    DecoderG decoder_g;
    Encoder encoder;
    std::vector<AIEM> aiem;
    DecoderD decoder_d;
    PatchDiscriminator discriminator;

    static VQCNIRModel create(const ModelConfig& config);

    /// Stage-1 autoencoding through the codebook with the pass-through rule.
    struct Reconstruction {
        Tensor image;
        Tensor latent;
        QuantizationResult quantization;
    };
    Reconstruction reconstruct(const Tensor& clean) const;

    /// Stage-2 restoration of a night image. Throws ContractError when H or W
    /// is not a multiple of 2^num_scales.
    RestorationOutput restore(const Tensor& night) const;

    ParamList prior_params() const;     // hq_encoder, codebook, decoder_g
    ParamList generator_params() const; // encoder, aiem, decoder_d
    ParamList discriminator_params() const;
    ParamList all_params() const;

    /// Copies hq_encoder weights into the night encoder.
    void warm_start_encoder();
};

void check_spatial_divisibility(const Tensor& image, Index factor);

/// Copies values between equally shaped parameter lists (matched by position).
void copy_param_values(const ParamList& from, const ParamList& to);

} // namespace vqcnir
