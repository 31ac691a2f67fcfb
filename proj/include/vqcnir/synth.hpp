#pragma once

#include "vqcnir/image.hpp"
#include "vqcnir/rng.hpp"

#include <cstdint>
#include <vector>

namespace vqcnir {

/// Procedural clean images: smooth colour gradients, anti-aliased shapes and
/// band-limited grating textures. Image i depends only on (seed, i).
std::vector<ImageRGB> generate_clean(std::size_t count, Index size, std::uint64_t seed);
ImageRGB generate_clean_image(Index size, std::uint64_t seed, std::uint64_t index);

enum class BlurKind { Identity, Gaussian, Motion };

struct BlurSpec {
    BlurKind kind = BlurKind::Identity;
    double sigma = 0.0;  // Gaussian
    double length = 0.0; // motion, pixels
    double angle = 0.0;  // motion, radians
};

struct DegradationRanges {
    double exposure_min = 0.1, exposure_max = 0.5;
    double gamma_min = 1.5, gamma_max = 3.0;
    double sigma_min = 1.0, sigma_max = 3.0;
    double motion_min = 5.0, motion_max = 15.0;
    double noise_min = 0.005, noise_max = 0.02;
    double motion_probability = 0.5;
    bool allow_identity_blur = false;

    /// Accepts any physically meaningful parameter set (used by unit tests).
    static DegradationRanges unrestricted();
    void validate() const;
};

struct DegradationParams {
    double exposure = 0.3;
    double gamma = 2.0;
    BlurSpec blur;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;

    /// Throws ConfigError when any value lies outside `ranges`.
    DegradationParams(double exposure, double gamma, BlurSpec blur, double noise_sigma,
                      std::uint64_t seed, const DegradationRanges& ranges = {});

    /// Draws every field uniformly from `ranges`; deterministic in seed.
    static DegradationParams sample(std::uint64_t seed, const DegradationRanges& ranges = {});
};

/// Square odd-sized kernel, normalised to unit sum.
struct BlurKernel {
    Index size = 1;
    std::vector<double> weights;
};
BlurKernel make_blur_kernel(const BlurSpec& spec);

/// clip(blur(s * clean^gamma) + N(0, sigma_n^2), 0, 1); per-channel blur with
/// reflect padding; noise drawn from params.seed.
ImageRGB degrade(const ImageRGB& clean, const DegradationParams& params);

/// Mirror index into [0, n) without repeating the edge sample.
Index reflect_index(Index i, Index n);

} // namespace vqcnir
