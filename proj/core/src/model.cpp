#include "mbsc/model.hpp"

#include <stdexcept>

namespace mbsc {

int ModelConfig::downsampling() const {
    int p = 1;
    for (int s : strides) p *= s;
    return p;
}

void ModelConfig::validate() const {
    if (strides.empty()) throw std::invalid_argument("ModelConfig: no strides");
    for (int s : strides)
        if (s < 1) throw std::invalid_argument("ModelConfig: strides must be >= 1");
    if (base_channels <= 0 || latent_dim <= 0)
        throw std::invalid_argument("ModelConfig: non-positive width");
    if (mrf_kernels.empty() || mrf_kernels.size() != mrf_dilations.size())
        throw std::invalid_argument("ModelConfig: mrf kernel/dilation lists must match");
    if (bottleneck_expansion < 1) throw std::invalid_argument("ModelConfig: bad expansion");
    if (conv_groups < 1 || base_channels % conv_groups != 0)
        throw std::invalid_argument("ModelConfig: channels not divisible by groups");
    if (sample_rate <= 0) throw std::invalid_argument("ModelConfig: bad sample rate");
}

// ---------------------------------------------------------------------------
// Encoder

Encoder::Encoder(const ModelConfig& cfg) {
    cfg.validate();
    const int C = cfg.base_channels;
    conv_in = Conv1d(1, C, 7, 1, 1, 1, PadMode::same);
    for (int s : cfg.strides) {
        Stage st;
        st.mrf = MRFBlock(C, cfg.mrf_kernels, cfg.mrf_dilations, cfg.activation);
        st.ib = InvertedBottleneck(C, cfg.bottleneck_expansion, cfg.conv_groups, cfg.activation);
        st.act = SnakeLayer(C, cfg.activation);
        st.down = Conv1d(C, C, 2 * s, s, 1, 1, PadMode::same_ceil);
        stages.push_back(std::move(st));
    }
    conv_out = Conv1d(C, cfg.latent_dim, 3, 1, 1, 1, PadMode::same);
}

void Encoder::init(Rng& rng) {
    conv_in.init(rng);
    for (Stage& st : stages) {
        st.mrf.init(rng);
        st.ib.init(rng);
        st.down.init(rng);
    }
    conv_out.init(rng);
}

Tensor Encoder::forward(const Tensor& x, Cache* cache) const {
    if (cache) {
        cache->stages.resize(stages.size());
        cache->filled = true;
    }
    Tensor h = conv_in.forward(x, cache ? &cache->in : nullptr);
    for (size_t i = 0; i < stages.size(); ++i) {
        Cache::StageCache* sc = cache ? &cache->stages[i] : nullptr;
        h = stages[i].mrf.forward(h, sc ? &sc->mrf : nullptr);
        h = stages[i].ib.forward(h, sc ? &sc->ib : nullptr);
        h = stages[i].act.forward(h, sc ? &sc->act : nullptr);
        h = stages[i].down.forward(h, sc ? &sc->down : nullptr);
    }
    return conv_out.forward(h, cache ? &cache->out : nullptr);
}

Tensor Encoder::backward(const Cache& cache, const Tensor& dz) {
    if (!cache.filled) throw std::invalid_argument("Encoder::backward: missing forward cache");
    Tensor g = conv_out.backward(cache.out, dz);
    for (size_t i = stages.size(); i-- > 0;) {
        const Cache::StageCache& sc = cache.stages[i];
        g = stages[i].down.backward(sc.down, g);
        g = stages[i].act.backward(sc.act, g);
        g = stages[i].ib.backward(sc.ib, g);
        g = stages[i].mrf.backward(sc.mrf, g);
    }
    return conv_in.backward(cache.in, g);
}

void Encoder::params(ParamList& out, const std::string& prefix) {
    conv_in.params(out, prefix + ".conv_in");
    for (size_t i = 0; i < stages.size(); ++i) {
        const std::string p = prefix + ".stage" + std::to_string(i);
        stages[i].mrf.params(out, p + ".mrf");
        stages[i].ib.params(out, p + ".ib");
        stages[i].act.params(out, p + ".snake");
        stages[i].down.params(out, p + ".down");
    }
    conv_out.params(out, prefix + ".conv_out");
}

// ---------------------------------------------------------------------------
// Decoder

Decoder::Decoder(const ModelConfig& cfg) {
    cfg.validate();
    const int C = cfg.base_channels;
    conv_in = Conv1d(cfg.latent_dim, C, 7, 1, 1, 1, PadMode::same);
    for (size_t i = cfg.strides.size(); i-- > 0;) {
        const int s = cfg.strides[i];
        Stage st;
        st.act = SnakeLayer(C, cfg.activation);
        st.up = ConvTranspose1d(C, C, 2 * s, s);
        st.mrf = MRFBlock(C, cfg.mrf_kernels, cfg.mrf_dilations, cfg.activation);
        st.ib = InvertedBottleneck(C, cfg.bottleneck_expansion, cfg.conv_groups, cfg.activation);
        stages.push_back(std::move(st));
    }
    act_out = SnakeLayer(C, cfg.activation);
    conv_out = Conv1d(C, 1, 7, 1, 1, 1, PadMode::same);
}

void Decoder::init(Rng& rng) {
    conv_in.init(rng);
    for (Stage& st : stages) {
        st.up.init(rng);
        st.mrf.init(rng);
        st.ib.init(rng);
    }
    conv_out.init(rng);
}

Tensor Decoder::forward(const Tensor& z, Cache* cache) const {
    if (cache) {
        cache->stages.resize(stages.size());
        cache->filled = true;
    }
    Tensor h = conv_in.forward(z, cache ? &cache->in : nullptr);
    for (size_t i = 0; i < stages.size(); ++i) {
        Cache::StageCache* sc = cache ? &cache->stages[i] : nullptr;
        h = stages[i].act.forward(h, sc ? &sc->act : nullptr);
        h = stages[i].up.forward(h, sc ? &sc->up : nullptr);
        h = stages[i].mrf.forward(h, sc ? &sc->mrf : nullptr);
        h = stages[i].ib.forward(h, sc ? &sc->ib : nullptr);
    }
    h = act_out.forward(h, cache ? &cache->act_out : nullptr);
    return conv_out.forward(h, cache ? &cache->out : nullptr);
}

Tensor Decoder::backward(const Cache& cache, const Tensor& dy) {
    if (!cache.filled) throw std::invalid_argument("Decoder::backward: missing forward cache");
    Tensor g = conv_out.backward(cache.out, dy);
    g = act_out.backward(cache.act_out, g);
    for (size_t i = stages.size(); i-- > 0;) {
        const Cache::StageCache& sc = cache.stages[i];
        g = stages[i].ib.backward(sc.ib, g);
        g = stages[i].mrf.backward(sc.mrf, g);
        g = stages[i].up.backward(sc.up, g);
        g = stages[i].act.backward(sc.act, g);
    }
    return conv_in.backward(cache.in, g);
}

void Decoder::params(ParamList& out, const std::string& prefix) {
    conv_in.params(out, prefix + ".conv_in");
    for (size_t i = 0; i < stages.size(); ++i) {
        const std::string p = prefix + ".stage" + std::to_string(i);
        stages[i].act.params(out, p + ".snake");
        stages[i].up.params(out, p + ".up");
        stages[i].mrf.params(out, p + ".mrf");
        stages[i].ib.params(out, p + ".ib");
    }
    act_out.params(out, prefix + ".snake_out");
    conv_out.params(out, prefix + ".conv_out");
}

// ---------------------------------------------------------------------------
// Model

Model::Model(const ModelConfig& cfg_) : cfg(cfg_), encoder(cfg_), decoder(cfg_) {}

void Model::init(Rng& rng) {
    encoder.init(rng);
    decoder.init(rng);
}

ParamList Model::parameters() {
    ParamList out;
    encoder.params(out, "enc");
    decoder.params(out, "dec");
    return out;
}

size_t Model::parameter_count() {
    size_t n = 0;
    for (const ParamRef& p : parameters()) n += p.value->size();
    return n;
}

LatentTensor encode(const AudioBuffer& audio, const Model& model, Encoder::Cache* cache) {
    if (audio.samples.empty()) throw std::invalid_argument("encode: empty audio");
    if (audio.sample_rate != model.cfg.sample_rate)
        throw std::invalid_argument("encode: sample rate does not match model");
    Tensor x(1, static_cast<int>(audio.samples.size()));
    std::copy(audio.samples.begin(), audio.samples.end(), x.row(0));
    LatentTensor z;
    z.values = model.encoder.forward(x, cache);
    z.latent_rate = model.cfg.latent_rate();
    return z;
}

AudioBuffer decode_latent(const LatentTensor& z, const Model& model, Decoder::Cache* cache) {
    if (z.values.rows != model.cfg.latent_dim)
        throw std::invalid_argument("decode_latent: latent dimension does not match model");
    const Tensor y = model.decoder.forward(z.values, cache);
    AudioBuffer out;
    out.sample_rate = model.cfg.sample_rate;
    out.samples.assign(y.row(0), y.row(0) + y.cols);
    return out;
}

} // namespace mbsc
