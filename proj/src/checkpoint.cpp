#include "vqcnir/checkpoint.hpp"

#include "vqcnir/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

namespace vqcnir {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'C', 'N'};

template <class T>
void put(std::vector<std::uint8_t>& out, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    template <class T>
    T get(const char* what)
    {
        if (bytes.size() - pos < sizeof(T)) {
            throw FormatError(std::string("checkpoint: truncated ") + what + " at byte offset " +
                              std::to_string(pos));
        }
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
};

} // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt)
{
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.size()));
    std::uint64_t offset = 0;
    for (const auto& e : ckpt) {
        if (shape_numel(e.shape) != static_cast<Index>(e.values.size())) {
            throw DimensionError("checkpoint entry " + e.name + " has inconsistent shape");
        }
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
        for (Index d : e.shape) {
            put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
        }
        put<std::uint64_t>(out, offset);
        offset += e.values.size() * sizeof(double);
    }
    for (const auto& e : ckpt) {
        for (double v : e.values) {
            put<double>(out, v);
        }
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError("checkpoint: bad magic at byte offset 0 (expected \"VQCN\")");
    }
    Reader r{bytes, 4};
    const auto version = r.get<std::uint32_t>("version");
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint: unsupported format version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = r.get<std::uint32_t>("entry count");
    struct Pending {
        std::string name;
        Shape shape;
        std::uint64_t offset;
    };
    std::vector<Pending> manifest;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.get<std::uint32_t>("name length");
        if (bytes.size() - r.pos < len) {
            throw FormatError("checkpoint: truncated name at byte offset " + std::to_string(r.pos));
        }
        Pending p;
        p.name.assign(reinterpret_cast<const char*>(bytes.data() + r.pos), len);
        r.pos += len;
        const auto rank = r.get<std::uint32_t>("rank");
        if (rank > 8) {
            throw FormatError("checkpoint: implausible rank for " + p.name);
        }
        for (std::uint32_t a = 0; a < rank; ++a) {
            p.shape.push_back(static_cast<Index>(r.get<std::uint64_t>("extent")));
        }
        p.offset = r.get<std::uint64_t>("blob offset");
        manifest.push_back(std::move(p));
    }
    const std::size_t blob_start = r.pos;
    Checkpoint out;
    for (auto& p : manifest) {
        const auto n = static_cast<std::size_t>(shape_numel(p.shape));
        const std::size_t begin = blob_start + p.offset;
        if (begin > bytes.size() || (bytes.size() - begin) / sizeof(double) < n) {
            throw FormatError("checkpoint: blob of " + p.name + " exceeds the file at byte offset " +
                              std::to_string(begin));
        }
        CheckpointEntry e{std::move(p.name), std::move(p.shape), std::vector<double>(n)};
        std::memcpy(e.values.data(), bytes.data() + begin, n * sizeof(double));
        out.push_back(std::move(e));
    }
    return out;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path)
{
    const auto bytes = encode_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

namespace {

struct MetaField {
    const char* name;
    Index ModelConfig::*field;
};

constexpr MetaField kMeta[] = {
    {"meta.base_channels", &ModelConfig::base_channels},
    {"meta.num_scales", &ModelConfig::num_scales},
    {"meta.aiem_blocks", &ModelConfig::aiem_blocks},
    {"meta.codebook_size", &ModelConfig::codebook_size},
    {"meta.latent_dim", &ModelConfig::latent_dim},
    {"meta.dbca_kernel", &ModelConfig::dbca_kernel},
    {"meta.curve_splits", &ModelConfig::curve_splits},
    {"meta.curve_order", &ModelConfig::curve_order},
    {"meta.ca_reduction", &ModelConfig::ca_reduction},
};

} // namespace

Checkpoint model_checkpoint(const VQCNIRModel& model, const ParamList& params)
{
    Checkpoint ckpt;
    for (const auto& m : kMeta) {
        ckpt.push_back({m.name, {1}, {static_cast<double>(model.config.*m.field)}});
    }
    ckpt.push_back({"meta.use_aiem", {1}, {model.config.use_aiem ? 1.0 : 0.0}});
    ckpt.push_back({"meta.use_dbca", {1}, {model.config.use_dbca ? 1.0 : 0.0}});
    ckpt.push_back({"meta.use_decoder_d", {1}, {model.config.use_decoder_d ? 1.0 : 0.0}});
    for (const auto& p : params) {
        auto d = p.tensor.data();
        ckpt.push_back({p.name, p.tensor.shape(), std::vector<double>(d.begin(), d.end())});
    }
    return ckpt;
}

std::size_t load_params(const Checkpoint& ckpt, const ParamList& params, bool require_all)
{
    std::unordered_map<std::string, const CheckpointEntry*> by_name;
    for (const auto& e : ckpt) {
        by_name[e.name] = &e;
    }
    std::size_t loaded = 0;
    for (const auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            if (require_all) {
                throw FormatError("checkpoint lacks parameter " + p.name);
            }
            continue;
        }
        if (it->second->shape != p.tensor.shape()) {
            throw FormatError("checkpoint parameter " + p.name + " has shape " +
                              shape_str(it->second->shape) + ", model expects " +
                              shape_str(p.tensor.shape()));
        }
        Tensor t = p.tensor;
        std::copy(it->second->values.begin(), it->second->values.end(), t.mutable_data().begin());
        ++loaded;
    }
    return loaded;
}

VQCNIRModel model_from_checkpoint(const Checkpoint& ckpt, bool require_all)
{
    std::unordered_map<std::string, double> meta;
    for (const auto& e : ckpt) {
        if (e.name.rfind("meta.", 0) == 0 && e.values.size() == 1) {
            meta[e.name] = e.values[0];
        }
    }
    ModelConfig cfg;
    for (const auto& m : kMeta) {
        auto it = meta.find(m.name);
        if (it == meta.end()) {
            throw FormatError(std::string("checkpoint lacks ") + m.name);
        }
        cfg.*m.field = static_cast<Index>(it->second);
    }
    auto flag = [&meta](const char* name) {
        auto it = meta.find(name);
        return it == meta.end() || it->second != 0.0;
    };
    cfg.use_aiem = flag("meta.use_aiem");
    cfg.use_dbca = flag("meta.use_dbca");
    cfg.use_decoder_d = flag("meta.use_decoder_d");
    VQCNIRModel model = VQCNIRModel::create(cfg);
    load_params(ckpt, model.all_params(), require_all);
    return model;
}

} // namespace vqcnir
