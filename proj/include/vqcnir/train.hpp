#pragma once

#include "vqcnir/checkpoint.hpp"
#include "vqcnir/image.hpp"
#include "vqcnir/losses.hpp"
#include "vqcnir/model.hpp"
#include "vqcnir/optim.hpp"
#include "vqcnir/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace vqcnir {

struct StageSchedule {
    std::int64_t iterations = 1000;
    Index batch_size = 4;
    MultiStepLR lr;
};

struct TrainConfig {
    AdamConfig adam;
    StageSchedule stage1;
    StageSchedule stage2;
    Index crop = 64;
    std::uint64_t seed = 0;

    double commit_beta = 0.25;
    LossWeights weights;
    std::int64_t adv_start = 0;       // first stage-2 iteration with the adversarial term
    std::int64_t reseed_interval = 0; // stage-1 dead-code reseeding; 0 -> once per epoch
    std::int64_t frozen_check_interval = 50;
    std::int64_t log_interval = 100;

    void validate() const;
};

/// Aligned clean/degraded image lists. Stage 1 only reads `clean`.
struct PairedDataset {
    std::vector<ImageRGB> clean;
    std::vector<ImageRGB> degraded;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const { return clean.size(); }
};

/// Clean image i is generate_clean_image(size, seed, first_index + i);
/// its degradation parameters come from a seed derived from the same pair.
PairedDataset synthesize_pairs(std::size_t count, Index size, std::uint64_t seed,
                               std::size_t first_index, const DegradationRanges& ranges);
std::uint64_t degradation_seed(std::uint64_t data_seed, std::size_t index);

/// Loads every pair listed in a manifest.
PairedDataset load_pairs(const std::filesystem::path& manifest);

struct Batch {
    Tensor clean;    // [B,3,crop,crop]
    Tensor degraded; // same shape
};

/// Random pairs with a shared random crop, quarter-turn rotation and flip.
Batch sample_batch(const PairedDataset& data, Index batch_size, Index crop, Rng& rng);

struct EvalResult {
    double psnr = 0.0;
    double ssim = 0.0;
    double input_psnr = 0.0; // degraded vs clean
    double input_ssim = 0.0;
    std::size_t count = 0;
};

/// Restores every degraded image and scores it against its clean image.
EvalResult evaluate_restoration(const VQCNIRModel& model, const PairedDataset& data);
/// Autoencodes every clean image through the codebook.
EvalResult evaluate_reconstruction(const VQCNIRModel& model, const PairedDataset& data);

/// Runs the model on an image of any size by reflect-padding to the next
/// multiple of the downsampling factor and cropping back.
ImageRGB restore_image(const VQCNIRModel& model, const ImageRGB& night);

struct LogRecord {
    std::int64_t iteration = 0;
    double loss = 0.0;
    double l_pix = 0.0;
    double l_ca = 0.0;
    double l_per = 0.0;
    double l_adv = 0.0;
    double lr = 0.0;
    double psnr_val = 0.0;
};

/// `iter=<n> loss=<f> l_pix=<f> l_ca=<f> l_per=<f> l_adv=<f> lr=<f> psnr_val=<f>`
std::string format_log(const LogRecord& r);

using LogSink = std::function<void(const std::string&)>;

/// Trains hq_encoder, codebook and decoder_g on clean images with L1
/// reconstruction plus the codebook loss. Unused codes are reseeded from
/// current latents at every reseed interval. Throws DivergenceError on a
/// non-finite loss.
VQCNIRModel train_stage1_vqgan(const ModelConfig& model_config, const TrainConfig& config,
                               const PairedDataset& train, const PairedDataset& val,
                               const LogSink& log);

/// Loads the stage-1 prior, freezes it, warm-starts the night encoder and
/// alternates generator and discriminator updates. Throws ContractError if
/// a frozen parameter changes.
VQCNIRModel train_stage2_vqcnir(const ModelConfig& model_config, const TrainConfig& config,
                                const Checkpoint& stage1, const PairedDataset& train,
                                const PairedDataset& val, const LogSink& log);

/// Bitwise copy of parameter values for frozen-state comparisons.
std::vector<std::vector<double>> snapshot_values(const ParamList& params);
bool values_identical(const ParamList& params, const std::vector<std::vector<double>>& snapshot);

} // namespace vqcnir
