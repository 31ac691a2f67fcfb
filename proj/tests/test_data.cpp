#include "test_util.hpp"

#include "vqcnir/errors.hpp"
#include "vqcnir/image.hpp"
#include "vqcnir/metrics.hpp"
#include "vqcnir/synth.hpp"
#include "vqcnir/train.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

using namespace vqcnir;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ImageRGB random_image(Index w, Index h, Rng& rng)
{
    ImageRGB im(w, h);
    for (double& v : im.pixels) v = rng.uniform();
    return im;
}

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("vqcnir_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Index mirror(Index i, Index n)
{
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

} // namespace

TEST_CASE("PPM encodes one byte per channel")
{
    ImageRGB im(1, 1);
    im.pixels = {1.0, 0.0, 0.5};
    auto b = encode_ppm(im);
    const std::string header = "P6\n1 1\n255\n";
    REQUIRE(b.size() == header.size() + 3);
    CHECK(std::string(b.begin(), b.begin() + static_cast<long>(header.size())) == header);
    CHECK(b[header.size()] == 0xFF);
    CHECK(b[header.size() + 1] == 0x00);
    CHECK(b[header.size() + 2] == 0x80);
}

TEST_CASE("PPM decode errors name a byte offset")
{
    CHECK_THROWS_AS(decode_ppm(bytes_of("P5\n1 1\n255\n\x01")), FormatError);
    try {
        decode_ppm(bytes_of("P6\n2 2\n255\n\x01\x02\x03"));
        FAIL("expected a FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
    CHECK_THROWS_AS(load_ppm("/nonexistent/x.ppm"), IoError);
}

TEST_CASE("PPM round trip is exact on 8-bit values")
{
    Rng rng(1);
    ImageRGB im(7, 5);
    for (double& v : im.pixels) v = static_cast<double>(rng.below(256)) / 255.0;
    CHECK(decode_ppm(encode_ppm(im)) == im);
    fs::path dir = scratch("ppm");
    save_ppm(im, dir / "a.ppm");
    CHECK(load_ppm(dir / "a.ppm") == im);
    fs::remove_all(dir);
}

TEST_CASE("identity degradation returns the clean image")
{
    Rng rng(2);
    auto any = DegradationRanges::unrestricted();
    ImageRGB im = random_image(9, 7, rng);
    CHECK(degrade(im, DegradationParams(1.0, 1.0, BlurSpec{}, 0.0, 1, any)) == im);
    ImageRGB white(8, 8, 1.0);
    for (BlurSpec b : {BlurSpec{}, BlurSpec{BlurKind::Gaussian, 1.5, 0, 0}, BlurSpec{BlurKind::Motion, 0, 7, 0.6}}) {
        ImageRGB d = degrade(white, DegradationParams(0.1, 2.5, b, 0.0, 1, any));
        for (double v : d.pixels) CHECK(std::abs(v - 0.1) < 1e-12);
    }
}

TEST_CASE("degradation matches a direct reference without noise")
{
    Rng rng(3);
    auto any = DegradationRanges::unrestricted();
    ImageRGB im = random_image(11, 9, rng);
    const double s = 0.3, g = 2.2, sigma = 1.2;
    ImageRGB out = degrade(im, DegradationParams(s, g, BlurSpec{BlurKind::Gaussian, sigma, 0, 0}, 0.0, 1, any));
    const Index r = 4;
    double z = 0;
    for (Index dy = -r; dy <= r; ++dy)
        for (Index dx = -r; dx <= r; ++dx) z += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    double worst = 0;
    for (Index y = 0; y < 9; ++y)
        for (Index x = 0; x < 11; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0;
                for (Index dy = -r; dy <= r; ++dy)
                    for (Index dx = -r; dx <= r; ++dx)
                        acc += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / z * s *
                               std::pow(im.at(mirror(y + dy, 9), mirror(x + dx, 11), c), g);
                worst = std::max(worst, std::abs(acc - out.at(y, x, c)));
            }
    CHECK(worst < 1e-12);
}

TEST_CASE("noisy degradation stays clipped to [0,1] and is seed deterministic")
{
    Rng rng(4);
    auto any = DegradationRanges::unrestricted();
    ImageRGB im = random_image(16, 16, rng);
    DegradationParams p(1.0, 1.0, BlurSpec{}, 0.5, 77, any);
    ImageRGB d = degrade(im, p);
    bool lo = false, hi = false;
    for (double v : d.pixels) {
        CHECK((v >= 0.0 && v <= 1.0));
        lo |= v == 0.0;
        hi |= v == 1.0;
    }
    CHECK((lo && hi));
    CHECK(degrade(im, p) == d);
}

TEST_CASE("blur kernels are normalised")
{
    for (double sigma : {0.5, 1.0, 2.7}) {
        auto k = make_blur_kernel(BlurSpec{BlurKind::Gaussian, sigma, 0, 0});
        double s = 0;
        for (double w : k.weights) s += w;
        CHECK(std::abs(s - 1.0) < 1e-12);
        CHECK(k.size % 2 == 1);
    }
    for (double len : {1.0, 5.0, 15.0}) {
        for (double angle : {0.0, 0.7, 2.0}) {
            auto k = make_blur_kernel(BlurSpec{BlurKind::Motion, 0, len, angle});
            double s = 0;
            for (double w : k.weights) {
                CHECK(w >= 0.0);
                s += w;
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
    CHECK_THROWS_AS(make_blur_kernel(BlurSpec{BlurKind::Gaussian, 0.0, 0, 0}), ConfigError);
    CHECK_THROWS_AS(DegradationParams(0.9, 2.0, BlurSpec{BlurKind::Gaussian, 1.5, 0, 0}, 0.01, 1), ConfigError);
}

TEST_CASE("sampled degradations respect the configured ranges")
{
    DegradationRanges r;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto p = DegradationParams::sample(seed, r);
        CHECK((p.exposure >= r.exposure_min && p.exposure <= r.exposure_max));
        CHECK((p.gamma >= r.gamma_min && p.gamma <= r.gamma_max));
        CHECK((p.noise_sigma >= r.noise_min && p.noise_sigma <= r.noise_max));
        CHECK(p.blur.kind != BlurKind::Identity);
        auto q = DegradationParams::sample(seed, r);
        CHECK(q.exposure == p.exposure);
        CHECK(q.blur.sigma == p.blur.sigma);
    }
}

TEST_CASE("procedural clean images")
{
    auto a = generate_clean(4, 32, 11);
    auto b = generate_clean(4, 32, 11);
    CHECK(a == b);
    CHECK(generate_clean_image(32, 11, 2) == a[2]);
    CHECK_FALSE(a[0] == a[1]);
    CHECK_FALSE(generate_clean(1, 32, 12)[0] == a[0]);
    double mean = 0;
    auto many = generate_clean(100, 32, 5);
    for (const auto& im : many) {
        CHECK(im.width == 32);
        for (double v : im.pixels) {
            CHECK((v >= 0.0 && v <= 1.0));
            mean += v;
        }
    }
    mean /= 100.0 * 32 * 32 * 3;
    CHECK((mean >= 0.35 && mean <= 0.65));
}

TEST_CASE("PSNR and SSIM")
{
    Rng rng(6);
    ImageRGB a = random_image(24, 20, rng), b = random_image(24, 20, rng);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(psnr(ImageRGB(16, 16, 0.5), ImageRGB(16, 16, 0.6)) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(psnr(a, b) == psnr(b, a));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-14);
    CHECK(ssim(a, b) < 0.2);
    CHECK(ssim(ImageRGB(16, 16, 0.3), ImageRGB(16, 16, 0.3)) == doctest::Approx(1.0));
}

TEST_CASE("manifest round trip and pair loading")
{
    fs::path dir = scratch("manifest");
    Rng rng(7);
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < 3; ++i) {
        const std::string n = std::to_string(i) + ".ppm";
        ImageRGB c = random_image(8, 8, rng);
        save_ppm(c, dir / ("c" + n));
        save_ppm(c, dir / ("d" + n));
        entries.push_back({"c" + n, "d" + n, static_cast<std::uint64_t>(100 + i)});
    }
    write_manifest(entries, dir / "manifest.txt");
    auto back = read_manifest(dir / "manifest.txt");
    REQUIRE(back.size() == 3);
    CHECK(fs::path(back[2].clean_path) == dir / "c2.ppm");
    CHECK(back[1].seed == 101);
    auto pairs = load_pairs(dir / "manifest.txt");
    CHECK(pairs.size() == 3);
    CHECK(pairs.clean[0] == pairs.degraded[0]);
    fs::remove_all(dir);
}

TEST_CASE("synthesized pairs are index addressable")
{
    DegradationRanges r;
    auto all = synthesize_pairs(5, 16, 3, 0, r);
    auto tail = synthesize_pairs(2, 16, 3, 3, r);
    CHECK(all.clean[3] == tail.clean[0]);
    CHECK(all.degraded[4] == tail.degraded[1]);
    CHECK(all.seeds[4] == degradation_seed(3, 4));
    Rng rng(8);
    Batch b = sample_batch(all, 3, 8, rng);
    CHECK(b.clean.shape() == Shape{3, 3, 8, 8});
    CHECK(b.degraded.shape() == b.clean.shape());
}
