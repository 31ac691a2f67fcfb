#include "vqcnir/metrics.hpp"

#include "vqcnir/errors.hpp"

#include <cmath>
#include <vector>

namespace vqcnir {

namespace {

void require_same_extent(const ImageRGB& a, const ImageRGB& b, const char* metric)
{
    if (a.width != b.width || a.height != b.height) {
        throw DimensionError(std::string(metric) + ": image extents differ (" +
                             std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                             std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
    }
}

std::vector<double> luma(const ImageRGB& im)
{
    std::vector<double> y(static_cast<std::size_t>(im.width * im.height));
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 0.299 * im.pixels[3 * i] + 0.587 * im.pixels[3 * i + 1] + 0.114 * im.pixels[3 * i + 2];
    }
    return y;
}

} // namespace

double psnr(const ImageRGB& a, const ImageRGB& b)
{
    require_same_extent(a, b, "psnr");
    // Neumaier summation.
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        const double v = d * d;
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    const double mse = (sum + comp) / static_cast<double>(a.pixels.size());
    if (mse <= 0.0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const ImageRGB& a, const ImageRGB& b)
{
    require_same_extent(a, b, "ssim");
    constexpr Index win = 11;
    constexpr double sigma = 1.5;
    if (a.width < win || a.height < win) {
        throw DimensionError("ssim: image smaller than the 11x11 window");
    }
    const double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    const double c2 = (0.03 * 1.0) * (0.03 * 1.0);

    std::vector<double> w(static_cast<std::size_t>(win * win));
    double wsum = 0.0;
    for (Index y = 0; y < win; ++y) {
        for (Index x = 0; x < win; ++x) {
            const double dy = static_cast<double>(y - win / 2);
            const double dx = static_cast<double>(x - win / 2);
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w[static_cast<std::size_t>(y * win + x)] = v;
            wsum += v;
        }
    }
    for (double& v : w) {
        v /= wsum;
    }

    const auto ya = luma(a);
    const auto yb = luma(b);
    const Index W = a.width;
    double total = 0.0;
    Index count = 0;
    for (Index oy = 0; oy + win <= a.height; ++oy) {
        for (Index ox = 0; ox + win <= W; ++ox) {
            double ma = 0.0;
            double mb = 0.0;
            for (Index y = 0; y < win; ++y) {
                for (Index x = 0; x < win; ++x) {
                    const double k = w[static_cast<std::size_t>(y * win + x)];
                    const auto i = static_cast<std::size_t>((oy + y) * W + ox + x);
                    ma += k * ya[i];
                    mb += k * yb[i];
                }
            }
            double va = 0.0;
            double vb = 0.0;
            double cov = 0.0;
            for (Index y = 0; y < win; ++y) {
                for (Index x = 0; x < win; ++x) {
                    const double k = w[static_cast<std::size_t>(y * win + x)];
                    const auto i = static_cast<std::size_t>((oy + y) * W + ox + x);
                    const double da = ya[i] - ma;
                    const double db = yb[i] - mb;
                    va += k * da * da;
                    vb += k * db * db;
                    cov += k * da * db;
                }
            }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

} // namespace vqcnir
