#include "vqcnir/train.hpp"

#include "vqcnir/errors.hpp"
#include "vqcnir/metrics.hpp"
#include "vqcnir/ops.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace vqcnir {

void TrainConfig::validate() const
{
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in [0,1)");
    }
    if (!(adam.eps > 0.0)) {
        throw ConfigError("adam_eps must be positive");
    }
    for (const StageSchedule* s : {&stage1, &stage2}) {
        if (s->iterations < 0) {
            throw ConfigError("iterations must be non-negative");
        }
        if (s->batch_size < 1) {
            throw ConfigError("batch_size must be at least 1");
        }
        s->lr.validate();
    }
    if (crop < 1) {
        throw ConfigError("crop must be positive");
    }
    if (commit_beta < 0.0) {
        throw ConfigError("commit_beta must be non-negative");
    }
    if (log_interval < 1 || frozen_check_interval < 1) {
        throw ConfigError("log_interval and frozen_check_interval must be positive");
    }
    if (reseed_interval < 0 || adv_start < 0) {
        throw ConfigError("reseed_interval and adv_start must be non-negative");
    }
}

std::uint64_t degradation_seed(std::uint64_t data_seed, std::size_t index)
{
    return Rng(data_seed).split(0xD15EA5E).split(index).next_u64();
}

PairedDataset synthesize_pairs(std::size_t count, Index size, std::uint64_t seed,
                               std::size_t first_index, const DegradationRanges& ranges)
{
    PairedDataset d;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t index = first_index + i;
        ImageRGB clean = generate_clean_image(size, seed, index);
        const std::uint64_t s = degradation_seed(seed, index);
        d.degraded.push_back(degrade(clean, DegradationParams::sample(s, ranges)));
        d.clean.push_back(std::move(clean));
        d.seeds.push_back(s);
    }
    return d;
}

PairedDataset load_pairs(const std::filesystem::path& manifest)
{
    PairedDataset d;
    for (const auto& e : read_manifest(manifest)) {
        d.clean.push_back(load_ppm(e.clean_path));
        d.degraded.push_back(load_ppm(e.degraded_path));
        if (d.clean.back().width != d.degraded.back().width ||
            d.clean.back().height != d.degraded.back().height) {
            throw FormatError("pair " + e.clean_path + " / " + e.degraded_path +
                              " differs in size");
        }
        d.seeds.push_back(e.seed);
    }
    return d;
}

Batch sample_batch(const PairedDataset& data, Index batch_size, Index crop_size, Rng& rng)
{
    if (data.size() == 0) {
        throw ConfigError("training set is empty");
    }
    std::vector<ImageRGB> clean;
    std::vector<ImageRGB> degraded;
    for (Index b = 0; b < batch_size; ++b) {
        const auto i = static_cast<std::size_t>(rng.below(data.size()));
        const ImageRGB& c = data.clean[i];
        if (c.width < crop_size || c.height < crop_size) {
            throw ConfigError("crop " + std::to_string(crop_size) + " exceeds image " +
                              std::to_string(c.width) + "x" + std::to_string(c.height));
        }
        const auto top = static_cast<Index>(rng.below(static_cast<std::uint64_t>(c.height - crop_size + 1)));
        const auto left = static_cast<Index>(rng.below(static_cast<std::uint64_t>(c.width - crop_size + 1)));
        const int turns = static_cast<int>(rng.below(4));
        const bool flip = rng.below(2) == 1;
        clean.push_back(rotate_flip(crop(c, top, left, crop_size, crop_size), turns, flip));
        const ImageRGB& dg = data.degraded.empty() ? c : data.degraded[i];
        degraded.push_back(rotate_flip(crop(dg, top, left, crop_size, crop_size), turns, flip));
    }
    return {images_to_tensor(clean), images_to_tensor(degraded)};
}

namespace {

ImageRGB pad_reflect(const ImageRGB& img, Index height, Index width)
{
    ImageRGB out(width, height);
    for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = img.at(reflect_index(y, img.height), reflect_index(x, img.width), c);
            }
        }
    }
    return out;
}

Index round_up(Index v, Index m) { return (v + m - 1) / m * m; }

template <class Fn>
EvalResult score_all(const PairedDataset& data, bool against_degraded, Fn&& produce)
{
    EvalResult r;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ImageRGB out = produce(i);
        r.psnr += psnr(out, data.clean[i]);
        r.ssim += ssim(out, data.clean[i]);
        if (against_degraded) {
            r.input_psnr += psnr(data.degraded[i], data.clean[i]);
            r.input_ssim += ssim(data.degraded[i], data.clean[i]);
        }
    }
    r.count = data.size();
    if (r.count > 0) {
        const auto n = static_cast<double>(r.count);
        r.psnr /= n;
        r.ssim /= n;
        r.input_psnr /= n;
        r.input_ssim /= n;
    }
    return r;
}

} // namespace

ImageRGB restore_image(const VQCNIRModel& model, const ImageRGB& night)
{
    NoGradGuard guard;
    const Index f = model.config.downsample_factor();
    const Index H = round_up(night.height, f);
    const Index W = round_up(night.width, f);
    const bool padded = H != night.height || W != night.width;
    const Tensor x = images_to_tensor({padded ? pad_reflect(night, H, W) : night});
    ImageRGB out = tensor_to_image(model.restore(x).restored, 0);
    return padded ? crop(out, 0, 0, night.height, night.width) : out;
}

EvalResult evaluate_restoration(const VQCNIRModel& model, const PairedDataset& data)
{
    return score_all(data, true, [&](std::size_t i) { return restore_image(model, data.degraded[i]); });
}

EvalResult evaluate_reconstruction(const VQCNIRModel& model, const PairedDataset& data)
{
    return score_all(data, false, [&](std::size_t i) {
        NoGradGuard guard;
        return tensor_to_image(model.reconstruct(images_to_tensor({data.clean[i]})).image, 0);
    });
}

std::string format_log(const LogRecord& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "iter=%lld loss=%.6f l_pix=%.6f l_ca=%.6f l_per=%.6f l_adv=%.6f lr=%.6g psnr_val=%.4f",
                  static_cast<long long>(r.iteration), r.loss, r.l_pix, r.l_ca, r.l_per, r.l_adv,
                  r.lr, r.psnr_val);
    return buf;
}

std::vector<std::vector<double>> snapshot_values(const ParamList& params)
{
    std::vector<std::vector<double>> s;
    for (const auto& p : params) {
        auto d = p.tensor.data();
        s.emplace_back(d.begin(), d.end());
    }
    return s;
}

bool values_identical(const ParamList& params, const std::vector<std::vector<double>>& snapshot)
{
    if (params.size() != snapshot.size()) {
        return false;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto d = params[i].tensor.data();
        if (d.size() != snapshot[i].size() ||
            std::memcmp(d.data(), snapshot[i].data(), d.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

namespace {

void require_finite(double v, std::int64_t it, const char* what)
{
    if (!std::isfinite(v)) {
        throw DivergenceError("iteration " + std::to_string(it) + ": " + what +
                              " is not finite (" + std::to_string(v) + ")");
    }
}

bool should_log(std::int64_t it, std::int64_t total, std::int64_t interval)
{
    return it % interval == 0 || it == total;
}

} // namespace

VQCNIRModel train_stage1_vqgan(const ModelConfig& model_config, const TrainConfig& config,
                               const PairedDataset& train, const PairedDataset& val,
                               const LogSink& log)
{
    config.validate();
    VQCNIRModel model = VQCNIRModel::create(model_config);
    const ParamList params = model.prior_params();
    Adam opt(params, config.adam);
    Rng data_rng = Rng(config.seed).split(101);
    Rng reseed_rng = Rng(config.seed).split(102);
    CodeUsage usage(model_config.codebook_size);
    const StageSchedule& sched = config.stage1;
    const std::int64_t epoch =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(train.size()) / sched.batch_size);
    const std::int64_t reseed_every = config.reseed_interval > 0 ? config.reseed_interval : epoch;

    for (std::int64_t it = 1; it <= sched.iterations; ++it) {
        const Batch batch = sample_batch(train, sched.batch_size, config.crop, data_rng);
        auto rec = model.reconstruct(batch.clean);
        Tensor l_pix = pixel_loss(rec.image, batch.clean);
        Tensor l_cb = codebook_learning_loss(rec.latent, rec.quantization, model.codebook,
                                             config.commit_beta);
        Tensor loss = add(l_pix, l_cb);
        require_finite(loss.item(), it, "stage-1 loss");
        const double lr = sched.lr.at(it - 1);
        backward(loss);
        opt.step(lr);
        opt.zero_grad();

        usage.observe(rec.quantization);
        if (it % reseed_every == 0) {
            const auto dead = usage.unused();
            if (!dead.empty()) {
                reseed_codes(model.codebook, dead, rec.latent.detach(), reseed_rng);
            }
            usage.reset();
        }
        if (should_log(it, sched.iterations, config.log_interval)) {
            LogRecord r;
            r.iteration = it;
            r.loss = loss.item();
            r.l_pix = l_pix.item();
            r.lr = lr;
            r.psnr_val = val.size() ? evaluate_reconstruction(model, val).psnr : 0.0;
            log(format_log(r));
        }
    }
    return model;
}

VQCNIRModel train_stage2_vqcnir(const ModelConfig& model_config, const TrainConfig& config,
                                const Checkpoint& stage1, const PairedDataset& train,
                                const PairedDataset& val, const LogSink& log)
{
    config.validate();
    VQCNIRModel model = VQCNIRModel::create(model_config);
    const ParamList prior = model.prior_params();
    load_params(stage1, prior, true);
    model.warm_start_encoder();
    set_trainable(prior, false);
    const auto frozen = snapshot_values(prior);

    Adam gen_opt(model.generator_params(), config.adam);
    Adam disc_opt(model.discriminator_params(), config.adam);
    Rng data_rng = Rng(config.seed).split(201);
    const StageSchedule& sched = config.stage2;

    for (std::int64_t it = 1; it <= sched.iterations; ++it) {
        const Batch batch = sample_batch(train, sched.batch_size, config.crop, data_rng);
        const bool adversarial = it > config.adv_start;
        const double lr = sched.lr.at(it - 1);

        Tensor z_gt;
        {
            NoGradGuard guard;
            z_gt = quantize(model.hq_encoder(batch.clean).latent, model.codebook).quantized;
        }
        RestorationOutput out = model.restore(batch.degraded);
        LossParts<Tensor> parts{
            pixel_loss(out.restored, batch.clean),
            code_alignment_loss(out.latent, z_gt),
            perceptual_loss(out.restored, batch.clean, model.hq_encoder),
            adversarial ? generator_hinge_loss(model.discriminator, out.restored)
                        : Tensor::scalar(0.0),
        };
        Tensor loss = total_loss(parts, config.weights);
        require_finite(loss.item(), it, "stage-2 loss");
        backward(loss);
        gen_opt.step(lr);
        gen_opt.zero_grad();
        // The generator pass also deposits gradient on the discriminator.
        disc_opt.zero_grad();

        if (adversarial) {
            Tensor d_loss = discriminator_hinge_loss(model.discriminator, out.restored.detach(),
                                                     batch.clean);
            require_finite(d_loss.item(), it, "discriminator loss");
            backward(d_loss);
            disc_opt.step(lr);
            disc_opt.zero_grad();
        }

        if (it % config.frozen_check_interval == 0 || it == sched.iterations) {
            if (!values_identical(prior, frozen)) {
                throw ContractError("iteration " + std::to_string(it) +
                                    ": a frozen prior parameter changed");
            }
        }
        if (should_log(it, sched.iterations, config.log_interval)) {
            LogRecord r;
            r.iteration = it;
            r.loss = loss.item();
            r.l_pix = parts.pixel.item();
            r.l_ca = parts.code_alignment.item();
            r.l_per = parts.perceptual.item();
            r.l_adv = parts.adversarial.item();
            r.lr = lr;
            r.psnr_val = val.size() ? evaluate_restoration(model, val).psnr : 0.0;
            log(format_log(r));
        }
    }
    return model;
}

} // namespace vqcnir
