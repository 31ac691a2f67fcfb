#include "commands.hpp"

#include "vqcnir/checkpoint.hpp"
#include "vqcnir/config.hpp"
#include "vqcnir/errors.hpp"
#include "vqcnir/image.hpp"
#include "vqcnir/metrics.hpp"
#include "vqcnir/synth.hpp"
#include "vqcnir/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

namespace vqcnir::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

class MetricsLog {
public:
    MetricsLog(std::ostream& out, const fs::path& path, std::string prefix = {})
        : out_(out), file_(path), prefix_(std::move(prefix))
    {
        if (!file_) {
            throw IoError("cannot write metrics log " + path.string());
        }
    }

    LogSink sink()
    {
        return [this](const std::string& line) {
            out_ << prefix_ << line << '\n' << std::flush;
            file_ << line << '\n' << std::flush;
        };
    }

private:
    std::ostream& out_;
    std::ofstream file_;
    std::string prefix_;
};

fs::path log_path_for(const fs::path& ckpt)
{
    fs::path p = ckpt;
    p += ".log";
    return p;
}

void echo_config(const RunConfig& cfg, std::ostream& out)
{
    for (const auto& line : describe_run_config(cfg)) {
        out << "config: " << line << '\n';
    }
}

int cmd_gradcheck(const std::string& filter, std::uint64_t seed, const Hooks& hooks,
                  std::ostream& out, std::ostream& err)
{
    auto cases = standard_gradcheck_cases();
    cases.insert(cases.end(), hooks.extra_gradcheck_cases.begin(), hooks.extra_gradcheck_cases.end());
    if (!filter.empty()) {
        std::erase_if(cases, [&](const GradcheckCase& c) { return c.op != filter; });
        if (cases.empty()) {
            err << "gradcheck: unknown op '" << filter << "'; known ops:";
            for (const auto& c : standard_gradcheck_cases()) {
                err << ' ' << c.op;
            }
            for (const auto& c : hooks.extra_gradcheck_cases) {
                err << ' ' << c.op;
            }
            err << '\n';
            return kUsageError;
        }
    }
    bool ok = true;
    for (const auto& c : cases) {
        const GradcheckResult r = run_gradcheck_case(c, seed);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s %s max_rel_err=%.3e shapes=%d", r.passed ? "PASS" : "FAIL",
                      r.op.c_str(), r.max_rel_error, r.variants);
        out << buf << '\n';
        ok = ok && r.passed;
    }
    return ok ? kOk : kVerificationFailure;
}

int cmd_synth(const fs::path& dir, std::size_t count, Index size, std::uint64_t seed,
              const std::string& config_path, std::ostream& out)
{
    if (size < 1) {
        throw ConfigError("--size must be positive");
    }
    DegradationRanges ranges;
    if (!config_path.empty()) {
        ranges = load_run_config(config_path).degradation;
    }
    fs::create_directories(dir / "clean");
    fs::create_directories(dir / "degraded");
    const PairedDataset pairs = synthesize_pairs(count, size, seed, 0, ranges);
    std::vector<ManifestEntry> manifest;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.ppm", i);
        const std::string clean = std::string("clean/") + name;
        const std::string degraded = std::string("degraded/") + name;
        save_ppm(pairs.clean[i], dir / clean);
        save_ppm(pairs.degraded[i], dir / degraded);
        manifest.push_back({clean, degraded, pairs.seeds[i]});
    }
    write_manifest(manifest, dir / "manifest.txt");
    out << "wrote " << pairs.size() << " pairs to " << (dir / "manifest.txt").string() << '\n';
    return kOk;
}

int cmd_train_vqgan(const fs::path& config_path, const fs::path& out_path, std::ostream& out)
{
    const RunConfig cfg = load_run_config(config_path);
    echo_config(cfg, out);
    const PairedDataset train = training_pairs(cfg);
    const PairedDataset val = validation_pairs(cfg);
    MetricsLog log(out, log_path_for(out_path));
    VQCNIRModel model = train_stage1_vqgan(cfg.model, cfg.train, train, val, log.sink());
    save_checkpoint(model_checkpoint(model, model.prior_params()), out_path);
    const EvalResult r = evaluate_reconstruction(model, val);
    out << "reconstruction psnr=" << fixed(r.psnr) << " ssim=" << fixed(r.ssim)
        << " count=" << r.count << '\n';
    out << "checkpoint written to " << out_path.string() << '\n';
    return kOk;
}

std::string resolve_stage1(const RunConfig& cfg, const std::string& flag)
{
    if (!flag.empty()) {
        return flag;
    }
    if (!cfg.stage1_checkpoint.empty()) {
        return cfg.stage1_checkpoint;
    }
    throw ConfigError("no stage-1 checkpoint: pass --stage1 or set key 'stage1_checkpoint'");
}

int cmd_train(const fs::path& config_path, const std::string& stage1_flag, const fs::path& out_path,
              std::ostream& out)
{
    const RunConfig cfg = load_run_config(config_path);
    echo_config(cfg, out);
    const Checkpoint stage1 = load_checkpoint(resolve_stage1(cfg, stage1_flag));
    const PairedDataset train = training_pairs(cfg);
    const PairedDataset val = validation_pairs(cfg);
    MetricsLog log(out, log_path_for(out_path));
    VQCNIRModel model = train_stage2_vqcnir(cfg.model, cfg.train, stage1, train, val, log.sink());
    save_checkpoint(model_checkpoint(model, model.all_params()), out_path);
    const EvalResult r = evaluate_restoration(model, val);
    out << "restoration psnr=" << fixed(r.psnr) << " ssim=" << fixed(r.ssim)
        << " input_psnr=" << fixed(r.input_psnr) << " input_ssim=" << fixed(r.input_ssim)
        << " count=" << r.count << '\n';
    out << "checkpoint written to " << out_path.string() << '\n';
    return kOk;
}

int cmd_infer(const fs::path& ckpt, const fs::path& in, const fs::path& out_path, std::ostream& out)
{
    const VQCNIRModel model = model_from_checkpoint(load_checkpoint(ckpt), true);
    const ImageRGB night = load_ppm(in);
    save_ppm(restore_image(model, night), out_path);
    out << "restored " << in.string() << " -> " << out_path.string() << '\n';
    return kOk;
}

int cmd_eval(const std::string& ckpt, const fs::path& manifest, std::ostream& out)
{
    const PairedDataset data = load_pairs(manifest);
    if (data.size() == 0) {
        throw FormatError("manifest " + manifest.string() + " lists no pairs");
    }
    if (ckpt.empty()) {
        double p = 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            p += psnr(data.degraded[i], data.clean[i]);
            s += ssim(data.degraded[i], data.clean[i]);
        }
        const auto n = static_cast<double>(data.size());
        out << "psnr=" << fixed(p / n) << " ssim=" << fixed(s / n, 6) << " count=" << data.size()
            << '\n';
        return kOk;
    }
    const VQCNIRModel model = model_from_checkpoint(load_checkpoint(ckpt), true);
    const EvalResult r = evaluate_restoration(model, data);
    out << "psnr=" << fixed(r.psnr) << " ssim=" << fixed(r.ssim, 6)
        << " input_psnr=" << fixed(r.input_psnr) << " input_ssim=" << fixed(r.input_ssim, 6)
        << " count=" << r.count << '\n';
    return kOk;
}

int cmd_ablate(const fs::path& config_path, const std::string& disable, const std::string& stage1_flag,
               const std::string& out_dir, std::ostream& out)
{
    RunConfig cfg = load_run_config(config_path);
    echo_config(cfg, out);
    const PairedDataset train = training_pairs(cfg);
    const PairedDataset val = validation_pairs(cfg);
    const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    fs::create_directories(dir);

    Checkpoint stage1;
    if (!stage1_flag.empty() || !cfg.stage1_checkpoint.empty()) {
        stage1 = load_checkpoint(resolve_stage1(cfg, stage1_flag));
    } else {
        MetricsLog log(out, dir / "stage1.ckpt.log", "[stage1] ");
        VQCNIRModel prior = train_stage1_vqgan(cfg.model, cfg.train, train, val, log.sink());
        stage1 = model_checkpoint(prior, prior.prior_params());
        save_checkpoint(stage1, dir / "stage1.ckpt");
    }

    ModelConfig ablated = cfg.model;
    if (disable == "aiem") {
        ablated.use_aiem = false;
    } else if (disable == "dbca") {
        ablated.use_dbca = false;
    } else if (disable == "decoder_d") {
        ablated.use_decoder_d = false;
    }
    const std::string variant = "no_" + disable;

    struct Run {
        std::string name;
        ModelConfig model;
        EvalResult result;
    };
    std::vector<Run> runs{{"full", cfg.model, {}}, {variant, ablated, {}}};
    for (auto& run : runs) {
        const fs::path ckpt = dir / (run.name + ".ckpt");
        MetricsLog log(out, log_path_for(ckpt), "[" + run.name + "] ");
        VQCNIRModel model = train_stage2_vqcnir(run.model, cfg.train, stage1, train, val, log.sink());
        save_checkpoint(model_checkpoint(model, model.all_params()), ckpt);
        run.result = evaluate_restoration(model, val);
    }
    for (const auto& run : runs) {
        out << "variant=" << run.name << " psnr=" << fixed(run.result.psnr)
            << " ssim=" << fixed(run.result.ssim) << " input_psnr=" << fixed(run.result.input_psnr)
            << '\n';
    }
    out << "delta_psnr=" << fixed(runs[0].result.psnr - runs[1].result.psnr) << '\n';
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks)
{
    CLI::App app{"Night-image restoration with a codebook prior", "vqcnir"};
    app.require_subcommand(1);

    std::string filter;
    std::uint64_t seed = 0;
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    gradcheck->add_option("--filter", filter, "Only check this op");
    gradcheck->add_option("--seed", seed, "Random seed");

    std::string out_dir;
    std::size_t count = 0;
    Index size = 64;
    std::uint64_t synth_seed = 0;
    std::string synth_config;
    auto* synth = app.add_subcommand("synth", "Write synthetic clean/degraded PPM pairs and a manifest");
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_option("--count", count, "Number of pairs")->required();
    synth->add_option("--size", size, "Image side length");
    synth->add_option("--seed", synth_seed, "Data seed");
    synth->add_option("--config", synth_config, "Run config supplying degradation ranges");

    std::string config;
    std::string out_path;
    auto* train_vqgan = app.add_subcommand("train_vqgan", "Stage 1: train the codebook prior");
    train_vqgan->add_option("--config", config, "Run config")->required();
    train_vqgan->add_option("--out", out_path, "Checkpoint to write")->required();

    std::string stage1;
    auto* train = app.add_subcommand("train", "Stage 2: train the restoration network");
    train->add_option("--config", config, "Run config")->required();
    train->add_option("--stage1", stage1, "Stage-1 checkpoint");
    train->add_option("--out", out_path, "Checkpoint to write")->required();

    std::string ckpt;
    std::string in_path;
    auto* infer = app.add_subcommand("infer", "Restore one PPM image");
    infer->add_option("--ckpt", ckpt, "Stage-2 checkpoint")->required();
    infer->add_option("--in", in_path, "Input PPM")->required();
    infer->add_option("--out", out_path, "Output PPM")->required();

    std::string manifest;
    auto* eval = app.add_subcommand("eval", "Mean PSNR/SSIM over a manifest");
    eval->add_option("--ckpt", ckpt, "Stage-2 checkpoint; without it the listed pairs are scored directly");
    eval->add_option("--manifest", manifest, "Pair manifest")->required();

    std::string disable;
    auto* ablate = app.add_subcommand("ablate", "Train full and ablated models with matched seeds");
    ablate->add_option("--config", config, "Run config")->required();
    ablate->add_option("--disable", disable, "Module replaced by identity")
        ->required()
        ->check(CLI::IsMember({"aiem", "dbca", "decoder_d"}));
    ablate->add_option("--stage1", stage1, "Stage-1 checkpoint (trained when absent)");
    ablate->add_option("--out", out_dir, "Directory for checkpoints and logs");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsageError;
    }

    try {
        if (*gradcheck) {
            return cmd_gradcheck(filter, seed, hooks, out, err);
        }
        if (*synth) {
            return cmd_synth(out_dir, count, size, synth_seed, synth_config, out);
        }
        if (*train_vqgan) {
            return cmd_train_vqgan(config, out_path, out);
        }
        if (*train) {
            return cmd_train(config, stage1, out_path, out);
        }
        if (*infer) {
            return cmd_infer(ckpt, in_path, out_path, out);
        }
        if (*eval) {
            return cmd_eval(ckpt, manifest, out);
        }
        if (*ablate) {
            return cmd_ablate(config, disable, stage1, out_dir, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kVerificationFailure;
    }
    return kUsageError;
}

} // namespace vqcnir::cli
