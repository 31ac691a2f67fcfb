#include "vqcnir/image.hpp"

#include "vqcnir/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace vqcnir {

ImageRGB::ImageRGB(Index w, Index h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w * h * 3), fill)
{
}

namespace {

struct HeaderReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw FormatError("PPM: " + what + " at byte offset " + std::to_string(pos));
    }

    void skip_space_and_comments()
    {
        while (pos < bytes.size()) {
            const auto c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* field)
    {
        skip_space_and_comments();
        if (pos >= bytes.size()) {
            fail(std::string("truncated header before ") + field);
        }
        if (!std::isdigit(bytes[pos])) {
            fail(std::string("expected decimal ") + field);
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000) {
                fail(std::string(field) + " too large");
            }
            ++pos;
        }
        return v;
    }
};

} // namespace

ImageRGB decode_ppm(const std::vector<std::uint8_t>& bytes)
{
    HeaderReader r{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
        r.fail("bad magic (expected \"P6\")");
    }
    r.pos = 2;
    if (r.pos < bytes.size() && !std::isspace(bytes[r.pos]) && bytes[r.pos] != '#') {
        r.fail("bad magic (expected \"P6\")");
    }
    const long w = r.read_uint("width");
    const long h = r.read_uint("height");
    const long maxval = r.read_uint("maxval");
    if (w < 1 || h < 1) {
        r.fail("width and height must be >= 1");
    }
    if (maxval != 255) {
        r.fail("unsupported maxval " + std::to_string(maxval) + " (only 255)");
    }
    if (r.pos >= bytes.size() || !std::isspace(bytes[r.pos])) {
        r.fail("missing whitespace after maxval");
    }
    ++r.pos;
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() - r.pos < need) {
        r.pos = bytes.size();
        r.fail("truncated payload (need " + std::to_string(need) + " bytes)");
    }
    ImageRGB img(w, h);
    for (std::size_t i = 0; i < need; ++i) {
        img.pixels[i] = static_cast<double>(bytes[r.pos + i]) / 255.0;
    }
    return img;
}

ImageRGB load_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_ppm(bytes);
}

std::vector<std::uint8_t> encode_ppm(const ImageRGB& image)
{
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixels.size());
    for (double v : image.pixels) {
        const double s = std::round(v * 255.0);
        out.push_back(static_cast<std::uint8_t>(std::clamp(s, 0.0, 255.0)));
    }
    return out;
}

void save_ppm(const ImageRGB& image, const std::filesystem::path& path)
{
    const auto bytes = encode_ppm(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

Tensor images_to_tensor(const std::vector<ImageRGB>& images)
{
    if (images.empty()) {
        throw ContractError("images_to_tensor: empty batch");
    }
    const Index W = images[0].width;
    const Index H = images[0].height;
    const auto B = static_cast<Index>(images.size());
    std::vector<double> data(static_cast<std::size_t>(B * 3 * H * W));
    for (Index b = 0; b < B; ++b) {
        const ImageRGB& im = images[static_cast<std::size_t>(b)];
        if (im.width != W || im.height != H) {
            throw DimensionError("images_to_tensor: image " + std::to_string(b) +
                                 " has different extents");
        }
        for (int c = 0; c < 3; ++c) {
            for (Index y = 0; y < H; ++y) {
                for (Index x = 0; x < W; ++x) {
                    data[static_cast<std::size_t>(((b * 3 + c) * H + y) * W + x)] = im.at(y, x, c);
                }
            }
        }
    }
    return Tensor::from({B, 3, H, W}, std::move(data));
}

ImageRGB tensor_to_image(const Tensor& batch, Index index)
{
    if (batch.rank() != 4 || batch.dim(1) != 3) {
        throw DimensionError("tensor_to_image: expected [B,3,H,W], got " + shape_str(batch.shape()));
    }
    const Index H = batch.dim(2);
    const Index W = batch.dim(3);
    ImageRGB im(W, H);
    auto d = batch.data();
    for (int c = 0; c < 3; ++c) {
        for (Index y = 0; y < H; ++y) {
            for (Index x = 0; x < W; ++x) {
                im.at(y, x, c) = std::clamp(d[static_cast<std::size_t>(((index * 3 + c) * H + y) * W + x)], 0.0, 1.0);
            }
        }
    }
    return im;
}

ImageRGB rotate_flip(const ImageRGB& image, int quarter_turns, bool flip)
{
    ImageRGB cur = image;
    for (int t = 0; t < ((quarter_turns % 4) + 4) % 4; ++t) {
        ImageRGB next(cur.height, cur.width);
        for (Index y = 0; y < cur.height; ++y) {
            for (Index x = 0; x < cur.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    next.at(cur.width - 1 - x, y, c) = cur.at(y, x, c);
                }
            }
        }
        cur = std::move(next);
    }
    if (flip) {
        ImageRGB next(cur.width, cur.height);
        for (Index y = 0; y < cur.height; ++y) {
            for (Index x = 0; x < cur.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    next.at(y, cur.width - 1 - x, c) = cur.at(y, x, c);
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

ImageRGB crop(const ImageRGB& image, Index top, Index left, Index height, Index width)
{
    if (top < 0 || left < 0 || top + height > image.height || left + width > image.width) {
        throw DimensionError("crop window outside the image");
    }
    ImageRGB out(width, height);
    for (Index y = 0; y < height; ++y) {
        for (Index x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(y, x, c) = image.at(top + y, left + x, c);
            }
        }
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    std::vector<ManifestEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw FormatError("manifest " + path.string() + " line " + std::to_string(lineno) +
                              ": expected clean<TAB>degraded<TAB>seed");
        }
        ManifestEntry e;
        e.clean_path = line.substr(0, t1);
        e.degraded_path = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string seed = line.substr(t2 + 1);
        try {
            std::size_t used = 0;
            e.seed = std::stoull(seed, &used);
            if (used != seed.size()) {
                throw std::invalid_argument(seed);
            }
        } catch (const std::exception&) {
            throw FormatError("manifest " + path.string() + " line " + std::to_string(lineno) +
                              ": bad seed '" + seed + "'");
        }
        // Relative paths are resolved against the manifest's directory.
        const auto base = path.parent_path();
        for (std::string* p : {&e.clean_path, &e.degraded_path}) {
            std::filesystem::path fp(*p);
            if (fp.is_relative()) {
                *p = (base / fp).string();
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write manifest " + path.string());
    }
    for (const auto& e : entries) {
        out << e.clean_path << '\t' << e.degraded_path << '\t' << e.seed << '\n';
    }
}

} // namespace vqcnir
