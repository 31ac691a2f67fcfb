#include "vqcnir/model.hpp"

#include "vqcnir/errors.hpp"

#include <algorithm>

namespace vqcnir {

namespace {

constexpr Conv2dOptions kSame3{1, 1, 1, 1};

enum Stream : std::uint64_t {
    kHqEncoder = 1,
    kCodebook,
    kDecoderG,
    kEncoder,
    kAiem,
    kDecoderD,
    kDiscriminator,
};

} // namespace

Index ModelConfig::channels_at(Index level) const
{
    return base_channels * std::min<Index>(Index{1} << std::min<Index>(level, 2), 4);
}

void ModelConfig::validate() const
{
    if (base_channels < 1) {
        throw ConfigError("base_channels must be >= 1");
    }
    if (num_scales < 2) {
        throw ConfigError("num_scales must be >= 2");
    }
    if (aiem_blocks < 0) {
        throw ConfigError("aiem_blocks must be >= 0");
    }
    if (codebook_size < 1 || latent_dim < 1) {
        throw ConfigError("codebook_size and latent_dim must be >= 1");
    }
    if (dbca_kernel < 1 || dbca_kernel % 2 == 0) {
        throw ConfigError("dbca_kernel must be odd");
    }
    IMAConvConfig{latent_dim, curve_splits, curve_order, 0, 0}.validate();
    if (ca_reduction < 1 || (2 * latent_dim) % ca_reduction != 0) {
        throw ConfigError("ca_reduction must divide 2*latent_dim");
    }
}

void check_spatial_divisibility(const Tensor& image, Index factor)
{
    if (image.rank() != 4) {
        throw DimensionError("expected an image batch [B,3,H,W], got " + shape_str(image.shape()));
    }
    if (image.dim(2) % factor != 0 || image.dim(3) % factor != 0) {
        throw ContractError("image extent " + std::to_string(image.dim(2)) + "x" +
                            std::to_string(image.dim(3)) + " is not a multiple of " +
                            std::to_string(factor) + "; pad the input to a multiple of " +
                            std::to_string(factor));
    }
}

Encoder Encoder::create(const ModelConfig& config, Rng& rng)
{
    Encoder e;
    const Index S = config.num_scales;
    e.stem = Conv2d::create(3, config.channels_at(0), 3, rng, kSame3);
    for (Index l = 0; l <= S; ++l) {
        e.blocks.push_back(ResBlock::create(config.channels_at(l), rng));
        if (l < S) {
            e.downs.push_back(Conv2d::create(config.channels_at(l), config.channels_at(l + 1), 3,
                                             rng, Conv2dOptions{2, 1, 1, 1}));
        }
    }
    e.to_latent = Conv2d::pointwise(config.channels_at(S), config.latent_dim, rng);
    return e;
}

EncoderOutput Encoder::operator()(const Tensor& image) const
{
    EncoderOutput out;
    Tensor h = blocks[0](stem(image));
    out.skips.push_back(h);
    for (std::size_t l = 0; l < downs.size(); ++l) {
        h = blocks[l + 1](downs[l](h));
        out.skips.push_back(h);
    }
    out.latent = to_latent(h);
    return out;
}

std::vector<Tensor> Encoder::stage_features(const Tensor& image) const
{
    Tensor h = blocks[0](stem(image));
    std::vector<Tensor> feats;
    for (std::size_t l = 0; l < downs.size(); ++l) {
        h = blocks[l + 1](downs[l](h));
        feats.push_back(h);
    }
    return feats;
}

void Encoder::collect(const std::string& prefix, ParamList& out) const
{
    stem.collect(prefix + ".stem", out);
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        blocks[l].collect(prefix + ".block" + std::to_string(l), out);
        if (l < downs.size()) {
            downs[l].collect(prefix + ".down" + std::to_string(l), out);
        }
    }
    to_latent.collect(prefix + ".to_latent", out);
}

DecoderG DecoderG::create(const ModelConfig& config, Rng& rng)
{
    DecoderG d;
    const Index S = config.num_scales;
    d.from_latent = Conv2d::pointwise(config.latent_dim, config.channels_at(S), rng);
    for (Index l = 0; l <= S; ++l) {
        d.blocks.push_back(ResBlock::create(config.channels_at(l), rng));
        if (l < S) {
            d.ups.push_back(ConvTranspose2d::create(config.channels_at(l + 1),
                                                    config.channels_at(l), 4, 2, 1, rng));
        }
    }
    d.head = Conv2d::create(config.channels_at(0), 3, 3, rng, kSame3);
    return d;
}

DecoderOutput DecoderG::operator()(const Tensor& quantized) const
{
    const std::size_t S = ups.size();
    DecoderOutput out;
    out.features.resize(S + 1);
    Tensor h = blocks[S](from_latent(quantized));
    out.features[S] = h;
    for (std::size_t l = S; l-- > 0;) {
        h = blocks[l](ups[l](h));
        out.features[l] = h;
    }
    out.image = head(leaky_relu(h, 0.2));
    return out;
}

void DecoderG::collect(const std::string& prefix, ParamList& out) const
{
    from_latent.collect(prefix + ".from_latent", out);
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        blocks[l].collect(prefix + ".block" + std::to_string(l), out);
        if (l < ups.size()) {
            ups[l].collect(prefix + ".up" + std::to_string(l), out);
        }
    }
    head.collect(prefix + ".head", out);
}

DecoderD DecoderD::create(const ModelConfig& config, Rng& rng)
{
    DecoderD d;
    const Index S = config.num_scales;
    d.from_latent = Conv2d::pointwise(config.latent_dim, config.channels_at(S), rng);
    for (Index l = 0; l <= S; ++l) {
        d.blocks.push_back(ResBlock::create(config.channels_at(l), rng));
        d.fusions.push_back(DBCA::create(DBCAConfig{config.channels_at(l), config.dbca_kernel, 7}, rng));
        if (l < S) {
            d.ups.push_back(ConvTranspose2d::create(config.channels_at(l + 1),
                                                    config.channels_at(l), 4, 2, 1, rng));
        }
    }
    d.head = Conv2d::create(config.channels_at(0), 3, 3, rng, kSame3);
    return d;
}

Tensor DecoderD::operator()(const Tensor& latent, const std::vector<Tensor>& skips,
                            const std::vector<Tensor>& prior, bool use_dbca) const
{
    const std::size_t S = ups.size();
    if (skips.size() != S + 1 || prior.size() != S + 1) {
        throw DimensionError("DecoderD: expected " + std::to_string(S + 1) +
                             " skip and prior features");
    }
    Tensor h = blocks[S](from_latent(latent));
    if (use_dbca) {
        h = fusions[S](h, prior[S]);
    }
    for (std::size_t l = S; l-- > 0;) {
        h = blocks[l](add(ups[l](h), skips[l]));
        if (use_dbca) {
            h = fusions[l](h, prior[l]);
        }
    }
    return head(leaky_relu(h, 0.2));
}

void DecoderD::collect(const std::string& prefix, ParamList& out) const
{
    from_latent.collect(prefix + ".from_latent", out);
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        blocks[l].collect(prefix + ".block" + std::to_string(l), out);
        fusions[l].collect(prefix + ".dbca" + std::to_string(l), out);
        if (l < ups.size()) {
            ups[l].collect(prefix + ".up" + std::to_string(l), out);
        }
    }
    head.collect(prefix + ".head", out);
}

PatchDiscriminator PatchDiscriminator::create(Index base_channels, Rng& rng)
{
    PatchDiscriminator d;
    const Conv2dOptions down{2, 1, 1, 1};
    const Index c = base_channels;
    d.layers.push_back(Conv2d::create(3, c, 4, rng, down));
    d.layers.push_back(Conv2d::create(c, 2 * c, 4, rng, down));
    d.layers.push_back(Conv2d::create(2 * c, 4 * c, 4, rng, down));
    d.layers.push_back(Conv2d::create(4 * c, 1, 4, rng, down, Init::Zero));
    return d;
}

Tensor PatchDiscriminator::operator()(const Tensor& image) const
{
    Tensor h = image;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i](h);
        if (i + 1 < layers.size()) {
            h = leaky_relu(h, 0.2);
        }
    }
    return h;
}

void PatchDiscriminator::collect(const std::string& prefix, ParamList& out) const
{
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].collect(prefix + ".conv" + std::to_string(i), out);
    }
}

VQCNIRModel VQCNIRModel::create(const ModelConfig& config)
{
    config.validate();
    const Rng root(config.seed);
    VQCNIRModel m;
    m.config = config;
    {
        Rng r = root.split(kHqEncoder);
        m.hq_encoder = Encoder::create(config, r);
    }
    {
        Rng r = root.split(kCodebook);
        m.codebook = Codebook::create(config.codebook_size, config.latent_dim, r);
    }
    {
        Rng r = root.split(kDecoderG);
        m.decoder_g = DecoderG::create(config, r);
    }
    {
        Rng r = root.split(kEncoder);
        m.encoder = Encoder::create(config, r);
    }
    {
        Rng r = root.split(kAiem);
        for (Index i = 0; i < config.aiem_blocks; ++i) {
            m.aiem.push_back(AIEM::create(AIEMConfig{config.latent_dim, config.curve_splits,
                                                     config.curve_order, config.ca_reduction},
                                          r));
        }
    }
    {
        Rng r = root.split(kDecoderD);
        m.decoder_d = DecoderD::create(config, r);
    }
    {
        Rng r = root.split(kDiscriminator);
        m.discriminator = PatchDiscriminator::create(config.base_channels, r);
    }
    return m;
}

VQCNIRModel::Reconstruction VQCNIRModel::reconstruct(const Tensor& clean) const
{
    check_spatial_divisibility(clean, config.downsample_factor());
    Reconstruction r;
    r.latent = hq_encoder(clean).latent;
    r.quantization = quantize(r.latent, codebook);
    r.image = decoder_g(pass_through(r.latent, r.quantization.quantized)).image;
    return r;
}

RestorationOutput VQCNIRModel::restore(const Tensor& night) const
{
    check_spatial_divisibility(night, config.downsample_factor());
    RestorationOutput out;
    EncoderOutput enc = encoder(night);
    Tensor z = enc.latent;
    if (config.use_aiem) {
        for (const AIEM& block : aiem) {
            z = block(z);
        }
    }
    out.latent = z;
    out.quantization = quantize(z, codebook);
    if (!config.use_decoder_d) {
        out.restored = decoder_g(pass_through(z, out.quantization.quantized)).image;
        return out;
    }
    DecoderOutput prior = decoder_g(out.quantization.quantized);
    out.restored = decoder_d(z, enc.skips, prior.features, config.use_dbca);
    return out;
}

ParamList VQCNIRModel::prior_params() const
{
    ParamList p;
    hq_encoder.collect("hq_encoder", p);
    p.push_back({"codebook.entries", codebook.entries});
    decoder_g.collect("decoder_g", p);
    return p;
}

ParamList VQCNIRModel::generator_params() const
{
    ParamList p;
    encoder.collect("encoder", p);
    for (std::size_t i = 0; i < aiem.size(); ++i) {
        aiem[i].collect("aiem" + std::to_string(i), p);
    }
    decoder_d.collect("decoder_d", p);
    return p;
}

ParamList VQCNIRModel::discriminator_params() const
{
    ParamList p;
    discriminator.collect("discriminator", p);
    return p;
}

ParamList VQCNIRModel::all_params() const
{
    ParamList p = prior_params();
    for (auto& x : generator_params()) {
        p.push_back(std::move(x));
    }
    for (auto& x : discriminator_params()) {
        p.push_back(std::move(x));
    }
    return p;
}

void copy_param_values(const ParamList& from, const ParamList& to)
{
    if (from.size() != to.size()) {
        throw DimensionError("copy_param_values: parameter count mismatch");
    }
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (from[i].tensor.shape() != to[i].tensor.shape()) {
            throw DimensionError("copy_param_values: shape mismatch at " + to[i].name);
        }
        Tensor dst = to[i].tensor;
        auto src = from[i].tensor.data();
        std::copy(src.begin(), src.end(), dst.mutable_data().begin());
    }
}

void VQCNIRModel::warm_start_encoder()
{
    ParamList src;
    ParamList dst;
    hq_encoder.collect("hq_encoder", src);
    encoder.collect("encoder", dst);
    copy_param_values(src, dst);
}

} // namespace vqcnir
