#include "vqcnir/losses.hpp"

#include "vqcnir/errors.hpp"

namespace vqcnir {

Tensor pixel_loss(const Tensor& restored, const Tensor& ground_truth)
{
    if (restored.shape() != ground_truth.shape()) {
        throw DimensionError("pixel_loss: shape mismatch " + shape_str(restored.shape()) +
                             " vs " + shape_str(ground_truth.shape()));
    }
    return mean(abs(sub(restored, ground_truth)));
}

Tensor perceptual_loss(const Tensor& restored, const Tensor& ground_truth,
                       const Encoder& extractor)
{
    if (restored.shape() != ground_truth.shape()) {
        throw DimensionError("perceptual_loss: shape mismatch");
    }
    std::vector<Tensor> fr = extractor.stage_features(restored);
    std::vector<Tensor> fg = extractor.stage_features(ground_truth);
    Tensor total = mean(abs(sub(fr[0], fg[0])));
    for (std::size_t i = 1; i < fr.size(); ++i) {
        total = add(total, mean(abs(sub(fr[i], fg[i]))));
    }
    return total;
}

Tensor generator_hinge_loss(const PatchDiscriminator& disc, const Tensor& restored)
{
    return scale(mean(disc(restored)), -1.0);
}

Tensor discriminator_hinge_loss(const PatchDiscriminator& disc, const Tensor& restored,
                                const Tensor& ground_truth)
{
    Tensor real = mean(relu(one_minus(disc(ground_truth))));
    Tensor fake = mean(relu(add_scalar(disc(restored), 1.0)));
    return add(real, fake);
}

AdversarialLosses adversarial_loss(const PatchDiscriminator& disc, const Tensor& restored,
                                   const Tensor& ground_truth)
{
    return {generator_hinge_loss(disc, restored),
            discriminator_hinge_loss(disc, restored, ground_truth)};
}

double total_loss(const LossParts<double>& p, const LossWeights& w)
{
    return w.pixel * p.pixel + w.code_alignment * p.code_alignment + w.perceptual * p.perceptual +
           w.adversarial * p.adversarial;
}

Tensor total_loss(const LossParts<Tensor>& p, const LossWeights& w)
{
    Tensor t = scale(p.pixel, w.pixel);
    t = add(t, scale(p.code_alignment, w.code_alignment));
    t = add(t, scale(p.perceptual, w.perceptual));
    return add(t, scale(p.adversarial, w.adversarial));
}

} // namespace vqcnir
