#include "vqcnir/checkpoint.hpp"
#include "vqcnir/config.hpp"
#include "vqcnir/dbca.hpp"
#include "vqcnir/gradcheck.hpp"
#include "vqcnir/losses.hpp"
#include "vqcnir/metrics.hpp"
#include "vqcnir/ops.hpp"
#include "vqcnir/train.hpp"
#include "vqcnir/vq.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace vqcnir;
namespace fs = std::filesystem;

namespace {

// Thresholds pinned from the first full run of this binary on the desk config.
constexpr double kStage1MinPsnr = 23.0;
constexpr double kStage2MinGain = 13.5;
constexpr double kAblationSlack = 0.1;

const char* kDeskConfig = R"(base_channels = 8
codebook_size = 64
latent_dim = 32
crop = 64
stage1.iterations = 3000
stage1.batch_size = 4
stage1.lr = 2e-3
stage1.milestones = 2000,2600
stage2.iterations = 600
stage2.batch_size = 4
stage2.lr = 1e-3
stage2.milestones = 400
log_interval = 100
train_count = 200
val_count = 20
image_size = 64
)";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
    for (double& x : v) {
        x = rng.uniform(lo, hi);
    }
    return Tensor::from(std::move(shape), std::move(v));
}

Outcome gradient_suite()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::set<std::string> required{
        "conv2d", "deform_conv2d", "layer_norm", "softmax", "matmul", "curve_map",
        "curve_estimate", "imaconv_forward", "hie_forward", "aiem_forward",
        "bidirectional_cross_attention", "dbca_forward", "pixel_loss", "perceptual_loss",
        "adversarial_loss_g", "adversarial_loss_d", "codebook_learning_loss",
        "code_alignment_loss", "total_loss"};
    std::set<std::string> seen;
    double worst = 0.0;
    std::string worst_op, failed;
    for (const auto& c : standard_gradcheck_cases()) {
        GradcheckResult r = run_gradcheck_case(c, 1);
        seen.insert(r.op);
        if (r.max_rel_error > worst) {
            worst = r.max_rel_error;
            worst_op = r.op;
        }
        if (!r.passed || r.variants < 3) {
            failed += " " + r.op;
        }
    }
    std::string missing;
    for (const auto& op : required) {
        if (!seen.count(op)) {
            missing += " " + op;
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = failed.empty() && missing.empty() && worst < 1e-4 && secs < 300.0;
    o.detail = std::to_string(seen.size()) + " ops, worst max_rel_err=" + fmt("%.3e", worst) + " (" +
               worst_op + "), " + fmt("%.1f", secs) + " s";
    if (!failed.empty()) o.detail += "; failed:" + failed;
    if (!missing.empty()) o.detail += "; missing:" + missing;
    return o;
}

Outcome quantization_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2);
    std::size_t mismatches = 0, ties = 0, positions = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const auto K = static_cast<Index>(1 + rng.below(64));
        const auto nz = static_cast<Index>(1 + rng.below(8));
        const auto B = static_cast<Index>(1 + rng.below(2));
        const auto h = static_cast<Index>(1 + rng.below(4));
        const auto w = static_cast<Index>(1 + rng.below(4));
        Codebook cb = Codebook::create(K, nz, rng);
        auto e = cb.entries.mutable_data();
        for (double& v : e) {
            v = rng.uniform(-1, 1);
        }
        // Duplicate a few entries so exact ties occur.
        for (Index d = 0; d < K / 4; ++d) {
            const auto src = static_cast<Index>(rng.below(static_cast<std::uint64_t>(K)));
            const auto dst = static_cast<Index>(rng.below(static_cast<std::uint64_t>(K)));
            for (Index c = 0; c < nz; ++c) e[static_cast<std::size_t>(dst * nz + c)] = e[static_cast<std::size_t>(src * nz + c)];
        }
        Tensor z = random_tensor({B, nz, h, w}, rng, -1.2, 1.2);
        auto zd = z.mutable_data();
        const Index hw = h * w;
        for (Index b = 0; b < B; ++b)
            for (Index p = 0; p < hw; ++p)
                if (rng.uniform() < 0.3) {
                    const auto k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(K)));
                    for (Index c = 0; c < nz; ++c)
                        zd[static_cast<std::size_t>((b * nz + c) * hw + p)] = e[static_cast<std::size_t>(k * nz + c)];
                }
        QuantizationResult r = quantize(z, cb);
        for (Index b = 0; b < B; ++b)
            for (Index p = 0; p < hw; ++p) {
                Index best = -1;
                double best_d = std::numeric_limits<double>::infinity();
                int hits = 0;
                for (Index k = 0; k < K; ++k) {
                    double d = 0;
                    for (Index c = 0; c < nz; ++c) {
                        const double diff = zd[static_cast<std::size_t>((b * nz + c) * hw + p)] - e[static_cast<std::size_t>(k * nz + c)];
                        d += diff * diff;
                    }
                    if (d < best_d) {
                        best_d = d;
                        best = k;
                        hits = 1;
                    } else if (d == best_d) {
                        ++hits;
                    }
                }
                ties += hits > 1;
                ++positions;
                mismatches += r.indices[static_cast<std::size_t>(b * hw + p)] != best;
            }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = mismatches == 0 && ties > 0 && secs < 30.0;
    o.detail = "1000 instances, " + std::to_string(positions) + " positions, " + std::to_string(ties) +
               " exact ties, " + std::to_string(mismatches) + " mismatches, " + fmt("%.2f", secs) + " s";
    return o;
}

Outcome curve_properties()
{
    Rng rng(3);
    const Index n = 100000;
    std::size_t violations = 0;

    std::vector<double> xs(static_cast<std::size_t>(n));
    for (double& v : xs) v = rng.uniform(-3, 4);
    Tensor x = Tensor::from({1, 1, 1, n}, xs);
    for (int order = 1; order <= 8; ++order) {
        CurveParams zero;
        for (int i = 0; i < order; ++i) zero.maps.push_back(Tensor::zeros({1, 1, 1, n}));
        Tensor y = curve_map(x, zero);
        violations += std::memcmp(y.data().data(), x.data().data(), xs.size() * sizeof(double)) != 0;
    }

    std::size_t range_samples = 0;
    for (int order = 1; order <= 8; ++order) {
        Tensor u = random_tensor({1, 1, 1, n}, rng, 0, 1);
        CurveParams p;
        for (int i = 0; i < order; ++i) p.maps.push_back(random_tensor({1, 1, 1, n}, rng, 0, 1));
        const Tensor y = curve_map(u, p);
        for (double v : y.data()) {
            violations += !(v >= 0.0 && v <= 1.0);
            ++range_samples;
        }
    }

    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (double& v : sorted) v = rng.uniform();
    std::sort(sorted.begin(), sorted.end());
    std::size_t mono_pairs = 0;
    for (int trial = 0; trial < 4; ++trial) {
        const double a = trial == 0 ? 1.0 : rng.uniform();
        Tensor y = curve_map(Tensor::from({1, 1, 1, n}, sorted), CurveParams{{Tensor::full({1, 1, 1, n}, a)}});
        for (Index i = 1; i < n; ++i) {
            violations += y.data()[static_cast<std::size_t>(i)] < y.data()[static_cast<std::size_t>(i - 1)];
            ++mono_pairs;
        }
    }

    std::vector<double> ends(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ends[static_cast<std::size_t>(i)] = i % 2 == 0 ? 0.0 : 1.0;
    Tensor fx = Tensor::from({1, 1, 1, n}, ends);
    for (int order = 1; order <= 8; ++order) {
        CurveParams p;
        for (int i = 0; i < order; ++i) p.maps.push_back(random_tensor({1, 1, 1, n}, rng, 0, 1));
        Tensor y = curve_map(fx, p);
        for (Index i = 0; i < n; ++i) violations += y.data()[static_cast<std::size_t>(i)] != ends[static_cast<std::size_t>(i)];
    }

    Outcome o;
    o.pass = violations == 0;
    o.detail = "identity 8x" + std::to_string(n) + ", range " + std::to_string(range_samples) +
               ", monotone pairs " + std::to_string(mono_pairs) + ", fixed points 8x" + std::to_string(n) +
               "; " + std::to_string(violations) + " violations";
    return o;
}

Outcome deform_reduction()
{
    Rng rng(4);
    double zero_err = 0.0, shift_err = 0.0;
    std::size_t interior = 0;
    for (int t = 0; t < 100; ++t) {
        const auto B = static_cast<Index>(1 + rng.below(2));
        const auto Cin = static_cast<Index>(1 + rng.below(4));
        const auto Cout = static_cast<Index>(1 + rng.below(4));
        const Index k = rng.below(2) == 0 ? 3 : 5;
        const auto H = static_cast<Index>(k + 2 + rng.below(6));
        const auto W = static_cast<Index>(k + 2 + rng.below(6));
        Tensor x = random_tensor({B, Cin, H, W}, rng);
        Tensor w = random_tensor({Cout, Cin, k, k}, rng);
        Tensor b = random_tensor({Cout}, rng);
        const Index r = k / 2;

        Tensor plain = conv2d(x, w, b, Conv2dOptions{1, r, 1, 1});
        Tensor def = deform_conv2d(x, Tensor::zeros({B, 2 * k * k, H, W}), w, b);
        for (std::size_t i = 0; i < plain.data().size(); ++i)
            zero_err = std::max(zero_err, std::abs(plain.data()[i] - def.data()[i]));

        const auto dy = static_cast<Index>(rng.below(5)) - 2;
        const auto dx = static_cast<Index>(rng.below(5)) - 2;
        std::vector<double> off(static_cast<std::size_t>(B * 2 * k * k * H * W));
        for (Index bb = 0; bb < B; ++bb)
            for (Index tap = 0; tap < k * k; ++tap)
                for (Index p = 0; p < H * W; ++p) {
                    off[static_cast<std::size_t>(((bb * 2 * k * k) + 2 * tap) * H * W + p)] = static_cast<double>(dy);
                    off[static_cast<std::size_t>(((bb * 2 * k * k) + 2 * tap + 1) * H * W + p)] = static_cast<double>(dx);
                }
        Tensor shifted_def = deform_conv2d(x, Tensor::from({B, 2 * k * k, H, W}, off), w, b);
        std::vector<double> sh(x.data().size(), 0.0);
        for (Index bb = 0; bb < B; ++bb)
            for (Index c = 0; c < Cin; ++c)
                for (Index y = 0; y < H; ++y)
                    for (Index xx = 0; xx < W; ++xx) {
                        const Index sy = y + dy, sx = xx + dx;
                        if (sy >= 0 && sy < H && sx >= 0 && sx < W)
                            sh[static_cast<std::size_t>(((bb * Cin + c) * H + y) * W + xx)] =
                                x.data()[static_cast<std::size_t>(((bb * Cin + c) * H + sy) * W + sx)];
                    }
        Tensor ref = conv2d(Tensor::from(x.shape(), sh), w, b, Conv2dOptions{1, r, 1, 1});
        for (Index bb = 0; bb < B; ++bb)
            for (Index c = 0; c < Cout; ++c)
                for (Index y = 0; y < H; ++y)
                    for (Index xx = 0; xx < W; ++xx) {
                        if (y - r + dy < 0 || y + r + dy >= H || xx - r + dx < 0 || xx + r + dx >= W) continue;
                        if (y - r < 0 || y + r >= H || xx - r < 0 || xx + r >= W) continue;
                        const auto i = static_cast<std::size_t>(((bb * Cout + c) * H + y) * W + xx);
                        shift_err = std::max(shift_err, std::abs(ref.data()[i] - shifted_def.data()[i]));
                        ++interior;
                    }
    }
    Outcome o;
    o.pass = zero_err <= 1e-12 && shift_err <= 1e-10 && interior > 0;
    o.detail = "100 cases, zero-offset max err " + fmt("%.2e", zero_err) + ", integer-shift max err " +
               fmt("%.2e", shift_err) + " over " + std::to_string(interior) + " interior outputs";
    return o;
}

Outcome dbca_identity()
{
    Rng rng(5);
    bool identical = true;
    double row_err = 0.0;
    std::uint64_t max_calls = 0, min_calls = ~std::uint64_t{0};
    for (Index C : {1, 4, 8, 16}) {
        for (int t = 0; t < 5; ++t) {
            DBCA m = DBCA::create(DBCAConfig{C, 3, 7}, rng);
            Tensor fd = random_tensor({2, C, 6, 5}, rng, -2, 2), fg = random_tensor({2, C, 6, 5}, rng, -2, 2);
            const auto before = softmax_call_count();
            Tensor y = m(fd, fg);
            const auto calls = softmax_call_count() - before;
            max_calls = std::max(max_calls, calls);
            min_calls = std::min(min_calls, calls);
            identical = identical && y.shape() == fd.shape() &&
                        std::memcmp(y.data().data(), fd.data().data(), fd.data().size() * sizeof(double)) == 0;
            auto att = m.cross_attention(fd, fg).attention;
            for (Index row = 0; row < 2 * C; ++row) {
                double s = 0;
                for (Index j = 0; j < C; ++j) s += att.data()[static_cast<std::size_t>(row * C + j)];
                row_err = std::max(row_err, std::abs(s - 1.0));
            }
        }
    }
    Outcome o;
    o.pass = identical && row_err <= 1e-12 && max_calls == 1 && min_calls == 1;
    o.detail = std::string("20 modules, output ") + (identical ? "bit-identical" : "DIFFERS") +
               ", row-sum err " + fmt("%.2e", row_err) + ", softmax calls per forward " +
               std::to_string(min_calls) + ".." + std::to_string(max_calls);
    return o;
}

Outcome loss_arithmetic()
{
    const double t = total_loss(LossParts<double>{1, 1, 1, 1}, LossWeights{1, 1, 1, 0.1});
    const Tensor tt = total_loss(LossParts<Tensor>{Tensor::scalar(1), Tensor::scalar(1), Tensor::scalar(1),
                                                   Tensor::scalar(1)},
                                 LossWeights{1, 1, 1, 0.1});
    Rng rng(6);
    double err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        LossParts<double> p{rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(-3, 3)};
        LossWeights w{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        const double ref = w.pixel * p.pixel + w.code_alignment * p.code_alignment +
                           w.perceptual * p.perceptual + w.adversarial * p.adversarial;
        Tensor tp = total_loss(LossParts<Tensor>{Tensor::scalar(p.pixel), Tensor::scalar(p.code_alignment),
                                                 Tensor::scalar(p.perceptual), Tensor::scalar(p.adversarial)},
                               w);
        err = std::max({err, std::abs(total_loss(p, w) - ref), std::abs(tp.item() - ref)});
    }
    Outcome o;
    o.pass = t == 3.1 && tt.item() == 3.1 && err <= 1e-12;
    o.detail = "unit parts give " + fmt("%.17g", t) + ", decomposition max err " + fmt("%.2e", err) +
               " over 1000 draws";
    return o;
}

Outcome metrics_correctness()
{
    const double p = psnr(ImageRGB(32, 32, 0.5), ImageRGB(32, 32, 0.4));
    Rng rng(10);
    double ssim_err = 0.0;
    for (int i = 0; i < 10; ++i) {
        ImageRGB im(24 + i, 20 + i);
        for (double& v : im.pixels) v = rng.uniform();
        ssim_err = std::max(ssim_err, std::abs(ssim(im, im) - 1.0));
    }
    int mismatched = 0;
    for (int i = 0; i < 100; ++i) {
        const auto w = static_cast<Index>(1 + rng.below(40));
        const auto h = static_cast<Index>(1 + rng.below(40));
        std::vector<std::uint8_t> bytes;
        const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
        bytes.assign(header.begin(), header.end());
        for (Index k = 0; k < w * h * 3; ++k) bytes.push_back(static_cast<std::uint8_t>(rng.below(256)));
        mismatched += encode_ppm(decode_ppm(bytes)) != bytes;
    }
    Outcome o;
    o.pass = p == 20.0 && ssim_err <= 1e-9 && mismatched == 0;
    o.detail = "psnr(0.1 error)=" + fmt("%.17g", p) + ", ssim identity err " + fmt("%.2e", ssim_err) +
               ", PPM round trips " + std::to_string(100 - mismatched) + "/100 byte-exact";
    return o;
}

struct StageRun {
    VQCNIRModel model;
    std::string log;
    std::vector<std::uint8_t> checkpoint;
};

void write_file(const fs::path& p, const std::string& s)
{
    std::ofstream f(p, std::ios::binary);
    f << s;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b)
{
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

LogSink collector(std::string& into, const std::string& tag)
{
    return [&into, tag](const std::string& line) {
        into += line + "\n";
        std::cerr << "[" << tag << "] " << line << std::endl;
    };
}

class DeskRuns {
public:
    explicit DeskRuns(fs::path dir) : dir_(std::move(dir)), cfg_(parse_run_config(kDeskConfig))
    {
        cfg_.validate();
        fs::create_directories(dir_);
        train_ = training_pairs(cfg_);
        val_ = validation_pairs(cfg_);
    }

    const RunConfig& config() const { return cfg_; }
    const PairedDataset& val() const { return val_; }

    StageRun& stage1()
    {
        if (!stage1_) {
            StageRun r{VQCNIRModel::create(cfg_.model), {}, {}};
            r.model = train_stage1_vqgan(cfg_.model, cfg_.train, train_, val_, collector(r.log, "stage1"));
            r.checkpoint = encode_checkpoint(model_checkpoint(r.model, r.model.prior_params()));
            write_bytes(dir_ / "stage1.ckpt", r.checkpoint);
            write_file(dir_ / "stage1.log", r.log);
            stage1_ = std::make_unique<StageRun>(std::move(r));
        }
        return *stage1_;
    }

    StageRun& stage2(const std::string& name)
    {
        auto it = runs_.find(name);
        if (it != runs_.end()) {
            return it->second;
        }
        ModelConfig mc = cfg_.model;
        if (name == "no_dbca") mc.use_dbca = false;
        if (name == "no_aiem") mc.use_aiem = false;
        const Checkpoint prior = decode_checkpoint(stage1().checkpoint);
        StageRun r{VQCNIRModel::create(mc), {}, {}};
        r.model = train_stage2_vqcnir(mc, cfg_.train, prior, train_, val_, collector(r.log, name));
        r.checkpoint = encode_checkpoint(model_checkpoint(r.model, r.model.all_params()));
        write_bytes(dir_ / (name + ".ckpt"), r.checkpoint);
        write_file(dir_ / (name + ".log"), r.log);
        return runs_.emplace(name, std::move(r)).first->second;
    }

private:
    fs::path dir_;
    RunConfig cfg_;
    PairedDataset train_, val_;
    std::unique_ptr<StageRun> stage1_;
    std::map<std::string, StageRun> runs_;
};

Outcome stage1_training(DeskRuns& runs)
{
    const auto t0 = std::chrono::steady_clock::now();
    StageRun& s1 = runs.stage1();
    EvalResult r = evaluate_reconstruction(s1.model, runs.val());
    Outcome o;
    o.pass = r.psnr >= kStage1MinPsnr && runs.config().train.stage1.iterations <= 20000;
    o.detail = "held-out reconstruction psnr=" + fmt("%.4f", r.psnr) + " ssim=" + fmt("%.4f", r.ssim) +
               " (T1=" + fmt("%.1f", kStage1MinPsnr) + ", " + std::to_string(runs.config().train.stage1.iterations) +
               " iterations, " + fmt("%.0f", seconds_since(t0)) + " s)";
    return o;
}

Outcome stage2_training(DeskRuns& runs)
{
    const auto t0 = std::chrono::steady_clock::now();
    StageRun& s1 = runs.stage1();
    StageRun& full = runs.stage2("full");
    EvalResult r = evaluate_restoration(full.model, runs.val());
    auto a = s1.model.prior_params(), b = full.model.prior_params();
    bool frozen = a.size() == b.size();
    for (std::size_t i = 0; frozen && i < a.size(); ++i) {
        frozen = a[i].name == b[i].name && a[i].tensor.shape() == b[i].tensor.shape() &&
                 std::memcmp(a[i].tensor.data().data(), b[i].tensor.data().data(),
                             a[i].tensor.data().size() * sizeof(double)) == 0;
    }
    const double gain = r.psnr - r.input_psnr;
    Outcome o;
    o.pass = gain >= kStage2MinGain && frozen && runs.config().train.stage2.iterations <= 20000;
    o.detail = "restored psnr=" + fmt("%.4f", r.psnr) + " vs degraded " + fmt("%.4f", r.input_psnr) +
               ", gain " + fmt("%.4f", gain) + " dB (T2=" + fmt("%.1f", kStage2MinGain) + "), prior " +
               (frozen ? "bit-identical" : "CHANGED") + " (" + fmt("%.0f", seconds_since(t0)) + " s)";
    return o;
}

Outcome ablation_ordering(DeskRuns& runs)
{
    const auto t0 = std::chrono::steady_clock::now();
    const double full = evaluate_restoration(runs.stage2("full").model, runs.val()).psnr;
    const double no_dbca = evaluate_restoration(runs.stage2("no_dbca").model, runs.val()).psnr;
    const double no_aiem = evaluate_restoration(runs.stage2("no_aiem").model, runs.val()).psnr;
    Outcome o;
    o.pass = full >= no_dbca - kAblationSlack && full >= no_aiem - kAblationSlack;
    const bool strict = full > no_dbca && full > no_aiem;
    o.detail = "full=" + fmt("%.4f", full) + " no_dbca=" + fmt("%.4f", no_dbca) + " no_aiem=" +
               fmt("%.4f", no_aiem) + " (strict ordering " + (strict ? "holds" : "does not hold") + ", " +
               fmt("%.0f", seconds_since(t0)) + " s)";
    return o;
}

Outcome determinism(DeskRuns& runs, const fs::path& dir)
{
    const auto t0 = std::chrono::steady_clock::now();
    StageRun& a = runs.stage2("full");
    StageRun& b = runs.stage2("full_repeat");
    const bool same_ckpt = a.checkpoint == b.checkpoint;
    const bool same_log = a.log == b.log;
    (void)dir;
    Outcome o;
    o.pass = same_ckpt && same_log && !a.log.empty();
    o.detail = std::string("checkpoints ") + (same_ckpt ? "byte-identical" : "DIFFER") + " (" +
               std::to_string(a.checkpoint.size()) + " bytes), logs " + (same_log ? "byte-identical" : "DIFFER") +
               " (" + fmt("%.0f", seconds_since(t0)) + " s)";
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_work");
    std::set<int> only;
    for (int i = 2; i < argc; ++i) only.insert(std::stoi(argv[i]));

    DeskRuns runs(dir);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient suite", gradient_suite},
        {"quantization oracle", quantization_oracle},
        {"curve-map properties", curve_properties},
        {"deform-conv reduction", deform_reduction},
        {"DBCA initialization identity", dbca_identity},
        {"loss arithmetic", loss_arithmetic},
        {"stage-1 desk training", [&] { return stage1_training(runs); }},
        {"stage-2 desk training", [&] { return stage2_training(runs); }},
        {"ablation ordering", [&] { return ablation_ordering(runs); }},
        {"metrics correctness", metrics_correctness},
        {"determinism", [&] { return determinism(runs, dir); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
