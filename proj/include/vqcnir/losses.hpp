#pragma once

#include "vqcnir/model.hpp"

namespace vqcnir {

/// Mean absolute error.
Tensor pixel_loss(const Tensor& restored, const Tensor& ground_truth);

/// Sum over encoder stages of the mean L1 distance between stage features of
/// the two images. The extractor is expected to be frozen.
Tensor perceptual_loss(const Tensor& restored, const Tensor& ground_truth,
                       const Encoder& extractor);

struct AdversarialLosses {
    Tensor generator;     // -mean(D(restored))
    Tensor discriminator; // mean(relu(1 - D(gt))) + mean(relu(1 + D(restored)))
};

/// Hinge formulation.
AdversarialLosses adversarial_loss(const PatchDiscriminator& disc, const Tensor& restored,
                                   const Tensor& ground_truth);
Tensor generator_hinge_loss(const PatchDiscriminator& disc, const Tensor& restored);
Tensor discriminator_hinge_loss(const PatchDiscriminator& disc, const Tensor& restored,
                                const Tensor& ground_truth);

struct LossWeights {
    double pixel = 1.0;
    double code_alignment = 1.0;
    double perceptual = 1.0;
    double adversarial = 0.1;
};

template <class T>
struct LossParts {
    T pixel;
    T code_alignment;
    T perceptual;
    T adversarial;
};

/// lambda_pix*L_pix + lambda_ca*L_ca + lambda_per*L_per + lambda_adv*L_adv
double total_loss(const LossParts<double>& parts, const LossWeights& w);
Tensor total_loss(const LossParts<Tensor>& parts, const LossWeights& w);

} // namespace vqcnir
