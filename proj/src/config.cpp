#include "vqcnir/config.hpp"

#include "vqcnir/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace vqcnir {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct BadValue {
    std::string message;
};

template <class T>
T parse_int(const std::string& v)
{
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw BadValue{"expected an integer, got '" + v + "'"};
    }
    return out;
}

double parse_double(const std::string& v)
{
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
        throw BadValue{"expected a finite number, got '" + v + "'"};
    }
    return out;
}

bool parse_bool(const std::string& v)
{
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw BadValue{"expected true/false, got '" + v + "'"};
}

std::vector<std::int64_t> parse_list(const std::string& v)
{
    std::vector<std::int64_t> out;
    if (v.empty()) {
        return out;
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int<std::int64_t>(trim(item)));
    }
    return out;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<std::int64_t>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
void parse_into(T& slot, const std::string& v)
{
    if constexpr (std::is_same_v<T, double>) {
        slot = parse_double(v);
    } else if constexpr (std::is_same_v<T, bool>) {
        slot = parse_bool(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
        slot = v;
    } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
        slot = parse_list(v);
    } else {
        slot = parse_int<T>(v);
    }
}

template <class T>
std::string render(const T& slot)
{
    if constexpr (std::is_same_v<T, double>) {
        return fmt(slot);
    } else if constexpr (std::is_same_v<T, bool>) {
        return slot ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
        return slot;
    } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
        return fmt_list(slot);
    } else {
        return std::to_string(slot);
    }
}

template <class T>
Field field(const char* key, std::function<T&(RunConfig&)> access)
{
    return {key, [access](RunConfig& c, const std::string& v) { parse_into(access(c), v); },
            [access](const RunConfig& c) { return render(access(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto m = [](Index ModelConfig::*p) { return [p](RunConfig& c) -> Index& { return c.model.*p; }; };
        f.push_back(field<Index>("base_channels", m(&ModelConfig::base_channels)));
        f.push_back(field<Index>("num_scales", m(&ModelConfig::num_scales)));
        f.push_back(field<Index>("aiem_blocks", m(&ModelConfig::aiem_blocks)));
        f.push_back(field<Index>("codebook_size", m(&ModelConfig::codebook_size)));
        f.push_back(field<Index>("latent_dim", m(&ModelConfig::latent_dim)));
        f.push_back(field<Index>("dbca_kernel", m(&ModelConfig::dbca_kernel)));
        f.push_back(field<Index>("curve_splits", m(&ModelConfig::curve_splits)));
        f.push_back(field<Index>("curve_order", m(&ModelConfig::curve_order)));
        f.push_back(field<Index>("ca_reduction", m(&ModelConfig::ca_reduction)));
        f.push_back(field<std::uint64_t>("model_seed", [](RunConfig& c) -> std::uint64_t& { return c.model.seed; }));
        f.push_back(field<bool>("use_aiem", [](RunConfig& c) -> bool& { return c.model.use_aiem; }));
        f.push_back(field<bool>("use_dbca", [](RunConfig& c) -> bool& { return c.model.use_dbca; }));
        f.push_back(field<bool>("use_decoder_d", [](RunConfig& c) -> bool& { return c.model.use_decoder_d; }));

        f.push_back(field<double>("adam_beta1", [](RunConfig& c) -> double& { return c.train.adam.beta1; }));
        f.push_back(field<double>("adam_beta2", [](RunConfig& c) -> double& { return c.train.adam.beta2; }));
        f.push_back(field<double>("adam_eps", [](RunConfig& c) -> double& { return c.train.adam.eps; }));
        for (int stage = 1; stage <= 2; ++stage) {
            auto sched = [stage](RunConfig& c) -> StageSchedule& {
                return stage == 1 ? c.train.stage1 : c.train.stage2;
            };
            static const char* names[2][5] = {
                {"stage1.iterations", "stage1.batch_size", "stage1.lr", "stage1.milestones",
                 "stage1.lr_decay"},
                {"stage2.iterations", "stage2.batch_size", "stage2.lr", "stage2.milestones",
                 "stage2.lr_decay"}};
            const auto& n = names[stage - 1];
            f.push_back(field<std::int64_t>(n[0], [sched](RunConfig& c) -> std::int64_t& { return sched(c).iterations; }));
            f.push_back(field<Index>(n[1], [sched](RunConfig& c) -> Index& { return sched(c).batch_size; }));
            f.push_back(field<double>(n[2], [sched](RunConfig& c) -> double& { return sched(c).lr.initial; }));
            f.push_back(field<std::vector<std::int64_t>>(n[3], [sched](RunConfig& c) -> std::vector<std::int64_t>& { return sched(c).lr.milestones; }));
            f.push_back(field<double>(n[4], [sched](RunConfig& c) -> double& { return sched(c).lr.decay; }));
        }
        f.push_back(field<Index>("crop", [](RunConfig& c) -> Index& { return c.train.crop; }));
        f.push_back(field<std::uint64_t>("train_seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
        f.push_back(field<double>("commit_beta", [](RunConfig& c) -> double& { return c.train.commit_beta; }));
        f.push_back(field<double>("lambda_pix", [](RunConfig& c) -> double& { return c.train.weights.pixel; }));
        f.push_back(field<double>("lambda_ca", [](RunConfig& c) -> double& { return c.train.weights.code_alignment; }));
        f.push_back(field<double>("lambda_per", [](RunConfig& c) -> double& { return c.train.weights.perceptual; }));
        f.push_back(field<double>("lambda_adv", [](RunConfig& c) -> double& { return c.train.weights.adversarial; }));
        f.push_back(field<std::int64_t>("adv_start", [](RunConfig& c) -> std::int64_t& { return c.train.adv_start; }));
        f.push_back(field<std::int64_t>("reseed_interval", [](RunConfig& c) -> std::int64_t& { return c.train.reseed_interval; }));
        f.push_back(field<std::int64_t>("frozen_check_interval", [](RunConfig& c) -> std::int64_t& { return c.train.frozen_check_interval; }));
        f.push_back(field<std::int64_t>("log_interval", [](RunConfig& c) -> std::int64_t& { return c.train.log_interval; }));

        auto d = [](double DegradationRanges::*p) { return [p](RunConfig& c) -> double& { return c.degradation.*p; }; };
        f.push_back(field<double>("exposure_min", d(&DegradationRanges::exposure_min)));
        f.push_back(field<double>("exposure_max", d(&DegradationRanges::exposure_max)));
        f.push_back(field<double>("gamma_min", d(&DegradationRanges::gamma_min)));
        f.push_back(field<double>("gamma_max", d(&DegradationRanges::gamma_max)));
        f.push_back(field<double>("blur_sigma_min", d(&DegradationRanges::sigma_min)));
        f.push_back(field<double>("blur_sigma_max", d(&DegradationRanges::sigma_max)));
        f.push_back(field<double>("motion_length_min", d(&DegradationRanges::motion_min)));
        f.push_back(field<double>("motion_length_max", d(&DegradationRanges::motion_max)));
        f.push_back(field<double>("noise_min", d(&DegradationRanges::noise_min)));
        f.push_back(field<double>("noise_max", d(&DegradationRanges::noise_max)));
        f.push_back(field<double>("motion_probability", d(&DegradationRanges::motion_probability)));

        f.push_back(field<std::string>("train_manifest", [](RunConfig& c) -> std::string& { return c.data.train_manifest; }));
        f.push_back(field<std::string>("val_manifest", [](RunConfig& c) -> std::string& { return c.data.val_manifest; }));
        f.push_back(field<std::size_t>("train_count", [](RunConfig& c) -> std::size_t& { return c.data.train_count; }));
        f.push_back(field<std::size_t>("val_count", [](RunConfig& c) -> std::size_t& { return c.data.val_count; }));
        f.push_back(field<Index>("image_size", [](RunConfig& c) -> Index& { return c.data.image_size; }));
        f.push_back(field<std::uint64_t>("data_seed", [](RunConfig& c) -> std::uint64_t& { return c.data.data_seed; }));
        f.push_back(field<std::string>("stage1_checkpoint", [](RunConfig& c) -> std::string& { return c.stage1_checkpoint; }));
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& key)
{
    for (const auto& f : fields()) {
        if (key == f.key) {
            return &f;
        }
    }
    return nullptr;
}

} // namespace

void RunConfig::validate() const
{
    auto wrap = [](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(what) + ": " + e.what());
        }
    };
    wrap("model", [&] { model.validate(); });
    wrap("training", [&] { train.validate(); });
    wrap("degradation", [&] { degradation.validate(); });
    if (train.crop % model.downsample_factor() != 0) {
        throw ConfigError("key 'crop': " + std::to_string(train.crop) + " is not a multiple of " +
                          std::to_string(model.downsample_factor()) + " (2^num_scales)");
    }
    if (data.train_manifest.empty() && data.image_size < train.crop) {
        throw ConfigError("key 'image_size': smaller than crop " + std::to_string(train.crop));
    }
}

RunConfig parse_run_config(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        const std::string content = trim(raw);
        if (content.empty()) {
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected key = value, got '" +
                              content + "'");
        }
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        const Field* f = find_field(key);
        if (!f) {
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
        }
        if (!cfg.explicit_keys.insert(key).second) {
            throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
        }
        try {
            f->set(cfg, value);
        } catch (const BadValue& e) {
            throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + e.message);
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    try {
        cfg = parse_run_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    for (std::string* p : {&cfg.data.train_manifest, &cfg.data.val_manifest, &cfg.stage1_checkpoint}) {
        if (!p->empty() && std::filesystem::path(*p).is_relative()) {
            *p = (base / *p).lexically_normal().string();
        }
    }
    return cfg;
}

std::vector<std::string> describe_run_config(const RunConfig& config)
{
    std::vector<std::string> lines;
    for (const auto& f : fields()) {
        std::string l = std::string(f.key) + " = " + f.get(config);
        if (!config.explicit_keys.count(f.key)) {
            l += "  (default)";
        }
        lines.push_back(std::move(l));
    }
    return lines;
}

std::vector<std::string> run_config_keys()
{
    std::vector<std::string> keys;
    for (const auto& f : fields()) {
        keys.push_back(f.key);
    }
    return keys;
}

PairedDataset training_pairs(const RunConfig& config)
{
    if (!config.data.train_manifest.empty()) {
        return load_pairs(config.data.train_manifest);
    }
    return synthesize_pairs(config.data.train_count, config.data.image_size, config.data.data_seed,
                            0, config.degradation);
}

PairedDataset validation_pairs(const RunConfig& config)
{
    if (!config.data.val_manifest.empty()) {
        return load_pairs(config.data.val_manifest);
    }
    // Held-out images continue the generator's index sequence past the training range.
    return synthesize_pairs(config.data.val_count, config.data.image_size, config.data.data_seed,
                            config.data.train_count, config.degradation);
}

} // namespace vqcnir
