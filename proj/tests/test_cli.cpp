#include "test_util.hpp"

#include "commands.hpp"

#include "vqcnir/config.hpp"
#include "vqcnir/errors.hpp"
#include "vqcnir/image.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace vqcnir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args, const cli::Hooks& hooks = {})
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err, hooks);
    return {code, out.str(), err.str()};
}

std::string config_error(const std::string& text)
{
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("vqcnir_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Forward doubles its input; backward claims a slope of 2.2.
Tensor skewed_double(const Tensor& x)
{
    std::vector<double> v(x.data().begin(), x.data().end());
    for (double& e : v) e *= 2.0;
    auto xi = x.impl();
    return autograd::make_result(x.shape(), std::move(v), {&x}, [xi](const TensorImpl& o) {
        auto g = autograd::grad_of(xi);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.2 * o.grad[i];
    });
}

} // namespace

TEST_CASE("config errors name the line and key")
{
    CHECK(config_error("base_channels = 8\nbogus = 1\n").find("line 2: unknown key 'bogus'") != std::string::npos);
    CHECK(config_error("crop = 32\n# note\ncrop = 64\n").find("line 3: duplicate key 'crop'") != std::string::npos);
    const std::string bad = config_error("\nstage1.lr = fast\n");
    CHECK(bad.find("line 2") != std::string::npos);
    CHECK(bad.find("stage1.lr") != std::string::npos);
    CHECK(config_error("just words\n").find("line 1") != std::string::npos);
    CHECK(config_error("crop = 30\nnum_scales = 3\n") != "");
}

TEST_CASE("config description marks defaults")
{
    RunConfig c = parse_run_config("base_channels = 12\n");
    CHECK(c.model.base_channels == 12);
    bool explicit_seen = false, default_seen = false;
    for (const auto& line : describe_run_config(c)) {
        if (line.rfind("base_channels", 0) == 0) {
            explicit_seen = line.find("(default)") == std::string::npos;
        }
        if (line.rfind("num_scales", 0) == 0) {
            default_seen = line.find("(default)") != std::string::npos;
        }
    }
    CHECK(explicit_seen);
    CHECK(default_seen);
}

TEST_CASE("gradcheck subcommand")
{
    Run r = invoke({"gradcheck", "--filter", "deform_conv2d"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.rfind("PASS deform_conv2d max_rel_err=", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);

    Run u = invoke({"gradcheck", "--filter", "no_such_op"});
    CHECK(u.code == cli::kUsageError);
    CHECK(u.err.find("deform_conv2d") != std::string::npos);

    cli::Hooks hooks;
    hooks.extra_gradcheck_cases.push_back(GradcheckCase{
        "skewed_double",
        [](int, Rng& rng) {
            Tensor x = testutil::random({2, 3}, rng, -1, 1, true);
            return GradcheckProblem{{x}, [x] { return skewed_double(x); }};
        },
        1});
    Run m = invoke({"gradcheck", "--filter", "skewed_double"}, hooks);
    CHECK(m.code == cli::kVerificationFailure);
    CHECK(m.out.find("FAIL skewed_double") != std::string::npos);
}

TEST_CASE("synth and eval on identical pairs")
{
    fs::path dir = scratch("synth");
    Run s = invoke({"synth", "--out", dir.string(), "--count", "3", "--size", "16", "--seed", "4"});
    REQUIRE(s.code == cli::kOk);
    CHECK(fs::exists(dir / "manifest.txt"));
    CHECK(fs::exists(dir / "clean" / "00002.ppm"));
    CHECK(load_ppm(dir / "degraded" / "00000.ppm").width == 16);

    fs::path same = scratch("same");
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < 2; ++i) {
        const std::string name = "clean/" + std::string(i == 0 ? "00000" : "00001") + ".ppm";
        fs::create_directories(same / "clean");
        fs::copy_file(dir / name, same / name);
        entries.push_back({name, name, 0});
    }
    write_manifest(entries, same / "manifest.txt");
    Run e = invoke({"eval", "--manifest", (same / "manifest.txt").string()});
    CHECK(e.code == cli::kOk);
    CHECK(e.out.find("psnr=99.0000 ssim=1.000000") != std::string::npos);
    fs::remove_all(dir);
    fs::remove_all(same);
}

TEST_CASE("exit codes")
{
    CHECK(invoke({"eval", "--manifest", "/nonexistent/manifest.txt"}).code == cli::kIoError);
    CHECK(invoke({"infer", "--ckpt", "/nonexistent.ckpt", "--in", "/x.ppm", "--out", "/y.ppm"}).code == cli::kIoError);
    CHECK(invoke({"frobnicate"}).code == cli::kUsageError);
    CHECK(invoke({"ablate", "--config", "/nonexistent.cfg", "--disable", "wings"}).code == cli::kUsageError);
    fs::path dir = scratch("cfg");
    {
        std::ofstream f(dir / "bad.cfg");
        f << "crop = 32\nunknown_thing = 3\n";
    }
    Run r = invoke({"train_vqgan", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x.ckpt").string()});
    CHECK(r.code == cli::kUsageError);
    CHECK(r.err.find("line 2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("train, infer and ablate on a tiny config")
{
    fs::path dir = scratch("train");
    {
        std::ofstream f(dir / "tiny.cfg");
        f << "base_channels = 8\nnum_scales = 2\naiem_blocks = 1\ncodebook_size = 8\nlatent_dim = 8\n"
             "crop = 16\nimage_size = 16\ntrain_count = 4\nval_count = 2\nlog_interval = 1\n"
             "stage1.iterations = 2\nstage1.batch_size = 2\nstage2.iterations = 2\nstage2.batch_size = 2\n";
    }
    const std::string cfg = (dir / "tiny.cfg").string();
    Run s1 = invoke({"train_vqgan", "--config", cfg, "--out", (dir / "s1.ckpt").string()});
    REQUIRE(s1.code == cli::kOk);
    CHECK(s1.out.find("config: base_channels = 8") != std::string::npos);
    CHECK(s1.out.find("iter=2 loss=") != std::string::npos);
    CHECK(fs::exists(dir / "s1.ckpt.log"));

    Run s2 = invoke({"train", "--config", cfg, "--stage1", (dir / "s1.ckpt").string(), "--out",
                     (dir / "s2.ckpt").string()});
    REQUIRE(s2.code == cli::kOk);
    Run again = invoke({"train", "--config", cfg, "--stage1", (dir / "s1.ckpt").string(), "--out",
                        (dir / "s2b.ckpt").string()});
    auto metrics = [](const std::string& out) {
        std::string keep;
        std::istringstream in(out);
        for (std::string line; std::getline(in, line);) {
            if (line.rfind("iter=", 0) == 0) keep += line + "\n";
        }
        return keep;
    };
    CHECK(metrics(s2.out) == metrics(again.out));
    CHECK_FALSE(metrics(s2.out).empty());

    ImageRGB night(20, 12, 0.1);
    save_ppm(night, dir / "night.ppm");
    Run inf = invoke({"infer", "--ckpt", (dir / "s2.ckpt").string(), "--in", (dir / "night.ppm").string(),
                      "--out", (dir / "out.ppm").string()});
    CHECK(inf.code == cli::kOk);
    ImageRGB restored = load_ppm(dir / "out.ppm");
    CHECK(restored.width == 20);
    CHECK(restored.height == 12);

    Run ab = invoke({"ablate", "--config", cfg, "--disable", "dbca", "--stage1", (dir / "s1.ckpt").string(),
                     "--out", (dir / "ablate").string()});
    CHECK(ab.code == cli::kOk);
    CHECK(ab.out.find("variant=full psnr=") != std::string::npos);
    CHECK(ab.out.find("variant=no_dbca psnr=") != std::string::npos);
    CHECK(ab.out.find("delta_psnr=") != std::string::npos);

    auto bytes = std::vector<char>();
    {
        std::ifstream f(dir / "s2.ckpt", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), {});
    }
    bytes[4] = 9;
    {
        std::ofstream f(dir / "bad.ckpt", std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    Run bad = invoke({"infer", "--ckpt", (dir / "bad.ckpt").string(), "--in", (dir / "night.ppm").string(),
                      "--out", (dir / "x.ppm").string()});
    CHECK(bad.code == cli::kIoError);
    CHECK(bad.err.find("version") != std::string::npos);
    fs::remove_all(dir);
}
