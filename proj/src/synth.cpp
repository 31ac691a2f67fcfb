#include "vqcnir/synth.hpp"

#include "vqcnir/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vqcnir {

namespace {

double smoothstep(double e0, double e1, double x)
{
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct Rgb {
    double v[3];
};

Rgb random_colour(Rng& rng)
{
    return {{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)}};
}

} // namespace

ImageRGB generate_clean_image(Index size, std::uint64_t seed, std::uint64_t index)
{
    if (size < 1) {
        throw ContractError("generate_clean: size must be >= 1");
    }
    Rng rng = Rng(seed).split(index);
    ImageRGB img(size, size);
    const double n = static_cast<double>(size);

    // Background: linear gradient between two colours.
    const Rgb c0 = random_colour(rng);
    const Rgb c1 = random_colour(rng);
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    for (Index y = 0; y < size; ++y) {
        for (Index x = 0; x < size; ++x) {
            const double u = ((static_cast<double>(x) / n - 0.5) * dx +
                              (static_cast<double>(y) / n - 0.5) * dy) / std::numbers::sqrt2 + 0.5;
            for (int c = 0; c < 3; ++c) {
                img.at(y, x, c) = c0.v[c] + (c1.v[c] - c0.v[c]) * u;
            }
        }
    }

    // Shapes, composited back to front with a one-pixel anti-aliased edge.
    const int shapes = 2 + static_cast<int>(rng.below(5));
    for (int s = 0; s < shapes; ++s) {
        const Rgb col = random_colour(rng);
        const double alpha = rng.uniform(0.6, 1.0);
        const bool circle = rng.uniform() < 0.5;
        const double cx = rng.uniform(0.1, 0.9) * n;
        const double cy = rng.uniform(0.1, 0.9) * n;
        const double r = rng.uniform(0.08, 0.3) * n;
        const double hw = rng.uniform(0.06, 0.3) * n;
        const double hh = rng.uniform(0.06, 0.3) * n;
        const double rot = rng.uniform(0.0, std::numbers::pi);
        const double cr = std::cos(rot);
        const double sr = std::sin(rot);
        for (Index y = 0; y < size; ++y) {
            for (Index x = 0; x < size; ++x) {
                const double px = static_cast<double>(x) + 0.5 - cx;
                const double py = static_cast<double>(y) + 0.5 - cy;
                double dist; // signed distance, negative inside
                if (circle) {
                    dist = std::hypot(px, py) - r;
                } else {
                    const double lx = std::abs(cr * px + sr * py) - hw;
                    const double ly = std::abs(-sr * px + cr * py) - hh;
                    dist = std::max(lx, ly);
                }
                const double cover = alpha * (1.0 - smoothstep(-0.5, 0.5, dist));
                if (cover <= 0.0) {
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    double& p = img.at(y, x, c);
                    p = p + (col.v[c] - p) * cover;
                }
            }
        }
    }

    // Band-limited texture: a few low-frequency gratings.
    const int gratings = 3;
    for (int g = 0; g < gratings; ++g) {
        const double freq = rng.uniform(1.0, 8.0) * 2.0 * std::numbers::pi / n;
        const double ang = rng.uniform(0.0, std::numbers::pi);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.01, 0.05);
        const double gx = std::cos(ang) * freq;
        const double gy = std::sin(ang) * freq;
        Rgb tint = {{rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0), rng.uniform(0.5, 1.0)}};
        for (Index y = 0; y < size; ++y) {
            for (Index x = 0; x < size; ++x) {
                const double w = amp * std::sin(gx * static_cast<double>(x) + gy * static_cast<double>(y) + phase);
                for (int c = 0; c < 3; ++c) {
                    img.at(y, x, c) += w * tint.v[c];
                }
            }
        }
    }
    for (double& v : img.pixels) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

std::vector<ImageRGB> generate_clean(std::size_t count, Index size, std::uint64_t seed)
{
    std::vector<ImageRGB> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(generate_clean_image(size, seed, i));
    }
    return out;
}

DegradationRanges DegradationRanges::unrestricted()
{
    DegradationRanges r;
    r.exposure_min = 1e-6;
    r.exposure_max = 1.0;
    r.gamma_min = 1e-3;
    r.gamma_max = 10.0;
    r.sigma_min = 0.1;
    r.sigma_max = 20.0;
    r.motion_min = 1.0;
    r.motion_max = 64.0;
    r.noise_min = 0.0;
    r.noise_max = 1.0;
    r.allow_identity_blur = true;
    return r;
}

void DegradationRanges::validate() const
{
    auto ordered = [](double lo, double hi, const char* name) {
        if (!(lo <= hi)) {
            throw ConfigError(std::string(name) + ": min exceeds max");
        }
    };
    ordered(exposure_min, exposure_max, "exposure");
    ordered(gamma_min, gamma_max, "gamma");
    ordered(sigma_min, sigma_max, "blur sigma");
    ordered(motion_min, motion_max, "motion length");
    ordered(noise_min, noise_max, "noise sigma");
    if (!(exposure_min > 0.0) || !(gamma_min > 0.0) || noise_min < 0.0) {
        throw ConfigError("degradation ranges must be positive (noise non-negative)");
    }
    if (!(motion_probability >= 0.0 && motion_probability <= 1.0)) {
        throw ConfigError("motion probability must lie in [0,1]");
    }
}

DegradationParams::DegradationParams(double exposure_, double gamma_, BlurSpec blur_,
                                     double noise_sigma_, std::uint64_t seed_,
                                     const DegradationRanges& ranges)
    : exposure(exposure_), gamma(gamma_), blur(blur_), noise_sigma(noise_sigma_), seed(seed_)
{
    auto within = [](double v, double lo, double hi, const char* name) {
        if (!(v >= lo && v <= hi)) {
            throw ConfigError(std::string("degradation ") + name + " " + std::to_string(v) +
                              " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    };
    within(exposure, ranges.exposure_min, ranges.exposure_max, "exposure");
    within(gamma, ranges.gamma_min, ranges.gamma_max, "gamma");
    within(noise_sigma, ranges.noise_min, ranges.noise_max, "noise sigma");
    switch (blur.kind) {
    case BlurKind::Identity:
        if (!ranges.allow_identity_blur) {
            throw ConfigError("degradation: identity blur not allowed by these ranges");
        }
        break;
    case BlurKind::Gaussian:
        within(blur.sigma, ranges.sigma_min, ranges.sigma_max, "blur sigma");
        break;
    case BlurKind::Motion:
        within(blur.length, ranges.motion_min, ranges.motion_max, "motion length");
        break;
    }
}

DegradationParams DegradationParams::sample(std::uint64_t seed, const DegradationRanges& ranges)
{
    ranges.validate();
    Rng rng(seed);
    const double s = rng.uniform(ranges.exposure_min, ranges.exposure_max);
    const double g = rng.uniform(ranges.gamma_min, ranges.gamma_max);
    BlurSpec blur;
    if (rng.uniform() < ranges.motion_probability) {
        blur.kind = BlurKind::Motion;
        blur.length = rng.uniform(ranges.motion_min, ranges.motion_max);
        blur.angle = rng.uniform(0.0, std::numbers::pi);
    } else {
        blur.kind = BlurKind::Gaussian;
        blur.sigma = rng.uniform(ranges.sigma_min, ranges.sigma_max);
    }
    const double noise = rng.uniform(ranges.noise_min, ranges.noise_max);
    return DegradationParams(s, g, blur, noise, rng.split(0xD1CE).next_u64(), ranges);
}

BlurKernel make_blur_kernel(const BlurSpec& spec)
{
    BlurKernel k;
    switch (spec.kind) {
    case BlurKind::Identity:
        k.size = 1;
        k.weights = {1.0};
        return k;
    case BlurKind::Gaussian: {
        if (!(spec.sigma > 0.0)) {
            throw ConfigError("gaussian blur needs sigma > 0");
        }
        const auto r = static_cast<Index>(std::ceil(3.0 * spec.sigma));
        k.size = 2 * r + 1;
        k.weights.resize(static_cast<std::size_t>(k.size * k.size));
        for (Index y = -r; y <= r; ++y) {
            for (Index x = -r; x <= r; ++x) {
                k.weights[static_cast<std::size_t>((y + r) * k.size + x + r)] =
                    std::exp(-static_cast<double>(x * x + y * y) / (2.0 * spec.sigma * spec.sigma));
            }
        }
        break;
    }
    case BlurKind::Motion: {
        if (!(spec.length >= 1.0)) {
            throw ConfigError("motion blur needs length >= 1");
        }
        const auto r = static_cast<Index>(std::ceil(spec.length / 2.0)) + 1;
        k.size = 2 * r + 1;
        k.weights.assign(static_cast<std::size_t>(k.size * k.size), 0.0);
        const auto samples = static_cast<int>(std::ceil(spec.length * 8.0));
        const double ca = std::cos(spec.angle);
        const double sa = std::sin(spec.angle);
        for (int i = 0; i <= samples; ++i) {
            const double t = (static_cast<double>(i) / samples - 0.5) * spec.length;
            const double px = t * ca + static_cast<double>(r);
            const double py = t * sa + static_cast<double>(r);
            const double fx = std::floor(px);
            const double fy = std::floor(py);
            const double lx = px - fx;
            const double ly = py - fy;
            const auto ix = static_cast<Index>(fx);
            const auto iy = static_cast<Index>(fy);
            const Index cy[4] = {iy, iy, iy + 1, iy + 1};
            const Index cx[4] = {ix, ix + 1, ix, ix + 1};
            const double cw[4] = {(1 - ly) * (1 - lx), (1 - ly) * lx, ly * (1 - lx), ly * lx};
            for (int c = 0; c < 4; ++c) {
                if (cy[c] >= 0 && cy[c] < k.size && cx[c] >= 0 && cx[c] < k.size) {
                    k.weights[static_cast<std::size_t>(cy[c] * k.size + cx[c])] += cw[c];
                }
            }
        }
        break;
    }
    }
    double total = 0.0;
    for (double w : k.weights) {
        total += w;
    }
    for (double& w : k.weights) {
        w /= total;
    }
    return k;
}

Index reflect_index(Index i, Index n)
{
    if (n == 1) {
        return 0;
    }
    const Index period = 2 * (n - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - i;
}

ImageRGB degrade(const ImageRGB& clean, const DegradationParams& params)
{
    const Index W = clean.width;
    const Index H = clean.height;
    ImageRGB dark(W, H);
    for (std::size_t i = 0; i < clean.pixels.size(); ++i) {
        dark.pixels[i] = params.exposure * std::pow(clean.pixels[i], params.gamma);
    }
    const BlurKernel k = make_blur_kernel(params.blur);
    const Index r = k.size / 2;
    ImageRGB out(W, H);
    for (Index y = 0; y < H; ++y) {
        for (Index x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (Index ky = 0; ky < k.size; ++ky) {
                    const Index sy = reflect_index(y + ky - r, H);
                    for (Index kx = 0; kx < k.size; ++kx) {
                        const Index sx = reflect_index(x + kx - r, W);
                        acc += k.weights[static_cast<std::size_t>(ky * k.size + kx)] * dark.at(sy, sx, c);
                    }
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    Rng rng(params.seed);
    for (double& v : out.pixels) {
        const double noise = params.noise_sigma > 0.0 ? params.noise_sigma * rng.normal() : 0.0;
        v = std::clamp(v + noise, 0.0, 1.0);
    }
    return out;
}

} // namespace vqcnir
