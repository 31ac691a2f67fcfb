#pragma once

#include "vqcnir/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vqcnir {

/// Interleaved RGB, row-major, values in [0,1].
struct ImageRGB {
    Index width = 0;
    Index height = 0;
    std::vector<double> pixels; // size width*height*3

    ImageRGB() = default;
    ImageRGB(Index w, Index h, double fill = 0.0);

    double& at(Index y, Index x, int c) { return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)]; }
    double at(Index y, Index x, int c) const { return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)]; }
    bool operator==(const ImageRGB&) const = default;
};

/// Binary P6, maxval 255. Bytes map to b/255.
ImageRGB load_ppm(const std::filesystem::path& path);
ImageRGB decode_ppm(const std::vector<std::uint8_t>& bytes);
/// Values map to round(v*255) clamped to [0,255].
void save_ppm(const ImageRGB& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const ImageRGB& image);

/// Stack images into [B,3,H,W]; all images must share extents.
Tensor images_to_tensor(const std::vector<ImageRGB>& images);
/// Sample `index` of a [B,3,H,W] tensor, clamped to [0,1].
ImageRGB tensor_to_image(const Tensor& batch, Index index);

/// Rotate by quarter turns counter-clockwise, then optionally mirror horizontally.
ImageRGB rotate_flip(const ImageRGB& image, int quarter_turns, bool flip);
ImageRGB crop(const ImageRGB& image, Index top, Index left, Index height, Index width);

struct ManifestEntry {
    std::string clean_path;
    std::string degraded_path;
    std::uint64_t seed = 0;
};

/// One `clean<TAB>degraded<TAB>seed` record per line.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

} // namespace vqcnir
