#include "mbsc/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace mbsc {

void zero_grads(const ParamList& params) {
    for (const ParamRef& p : params) p.grad->fill(0.0);
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(int in, int out, int k, int stride_, int dilation_, int groups_, PadMode mode)
    : in_ch(in), out_ch(out), kernel(k), stride(stride_), dilation(dilation_), groups(groups_),
      pad_mode(mode) {
    if (in <= 0 || out <= 0 || k <= 0 || stride_ <= 0 || dilation_ <= 0 || groups_ <= 0)
        throw std::invalid_argument("Conv1d: non-positive dimension");
    if (in % groups_ != 0 || out % groups_ != 0)
        throw std::invalid_argument("Conv1d: channels not divisible by groups");
    if (mode == PadMode::same && stride_ != 1)
        throw std::invalid_argument("Conv1d: same padding requires stride 1");
    if (mode == PadMode::same && k % 2 == 0)
        throw std::invalid_argument("Conv1d: same padding requires an odd kernel");
    w = Tensor(out, (in / groups_) * k);
    b = Tensor(out, 1);
    dw = Tensor(out, (in / groups_) * k);
    db = Tensor(out, 1);
}

void Conv1d::init(Rng& rng) {
    const double scale = std::sqrt(1.0 / ((in_ch / groups) * kernel));
    for (double& x : w.v) x = scale * rng.normal();
    b.fill(0.0);
}

int Conv1d::output_length(int T) const {
    return pad_mode == PadMode::same ? T : (T + stride - 1) / stride;
}

Tensor Conv1d::forward(const Tensor& x, Cache* cache) const {
    if (x.rows != in_ch) throw std::invalid_argument("Conv1d: channel mismatch");
    const int T = x.cols;
    const int T_out = output_length(T);
    const int eff_k = dilation * (kernel - 1) + 1;
    int pad_left;
    if (pad_mode == PadMode::same) {
        pad_left = dilation * (kernel - 1) / 2;
    } else {
        const int total = std::max(0, (T_out - 1) * stride + eff_k - T);
        pad_left = total / 2;
    }
    if (cache) {
        cache->x = x;
        cache->pad_left = pad_left;
    }

    Tensor y(out_ch, T_out);
    const int in_per_group = in_ch / groups;
    const int out_per_group = out_ch / groups;
    for (int o = 0; o < out_ch; ++o) {
        const int gi0 = (o / out_per_group) * in_per_group;
        const double* wo = w.row(o);
        double* yo = y.row(o);
        for (int tau = 0; tau < T_out; ++tau) yo[tau] = b.at(o, 0);
        for (int i = 0; i < in_per_group; ++i) {
            const double* xr = x.row(gi0 + i);
            for (int t = 0; t < kernel; ++t) {
                const double wv = wo[i * kernel + t];
                if (wv == 0.0) continue;
                const int off = t * dilation - pad_left;
                // valid input positions: 0 <= tau*stride + off < T
                int tau0 = 0;
                if (off < 0) tau0 = (-off + stride - 1) / stride;
                const int tau1 = std::min(T_out, off < T ? (T - off + stride - 1) / stride : 0);
                for (int tau = tau0; tau < tau1; ++tau) yo[tau] += wv * xr[tau * stride + off];
            }
        }
    }
    return y;
}

Tensor Conv1d::backward(const Cache& cache, const Tensor& dy) {
    const Tensor& x = cache.x;
    const int T = x.cols;
    const int pad_left = cache.pad_left;
    if (dy.rows != out_ch || dy.cols != output_length(T))
        throw std::invalid_argument("Conv1d backward: gradient shape mismatch");

    Tensor dx(in_ch, T);
    const int in_per_group = in_ch / groups;
    const int out_per_group = out_ch / groups;
    for (int o = 0; o < out_ch; ++o) {
        const int gi0 = (o / out_per_group) * in_per_group;
        const double* wo = w.row(o);
        double* dwo = dw.row(o);
        const double* dyo = dy.row(o);
        double bias_acc = 0.0;
        for (int tau = 0; tau < dy.cols; ++tau) bias_acc += dyo[tau];
        db.at(o, 0) += bias_acc;
        for (int i = 0; i < in_per_group; ++i) {
            const double* xr = x.row(gi0 + i);
            double* dxr = dx.row(gi0 + i);
            for (int t = 0; t < kernel; ++t) {
                const int off = t * dilation - pad_left;
                int tau0 = 0;
                if (off < 0) tau0 = (-off + stride - 1) / stride;
                const int tau1 = std::min(dy.cols, off < T ? (T - off + stride - 1) / stride : 0);
                const double wv = wo[i * kernel + t];
                double wacc = 0.0;
                for (int tau = tau0; tau < tau1; ++tau) {
                    const double g = dyo[tau];
                    wacc += g * xr[tau * stride + off];
                    dxr[tau * stride + off] += g * wv;
                }
                dwo[i * kernel + t] += wacc;
            }
        }
    }
    return dx;
}

void Conv1d::params(ParamList& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
}

// ---------------------------------------------------------------------------
// ConvTranspose1d

ConvTranspose1d::ConvTranspose1d(int in, int out, int k, int stride_)
    : in_ch(in), out_ch(out), kernel(k), stride(stride_) {
    if (in <= 0 || out <= 0 || k <= 0 || stride_ <= 0)
        throw std::invalid_argument("ConvTranspose1d: non-positive dimension");
    if (k < stride_)
        throw std::invalid_argument("ConvTranspose1d: kernel must be at least the stride");
    w = Tensor(out, in * k);
    b = Tensor(out, 1);
    dw = Tensor(out, in * k);
    db = Tensor(out, 1);
}

void ConvTranspose1d::init(Rng& rng) {
    const double scale = std::sqrt(1.0 / (in_ch * kernel / stride));
    for (double& x : w.v) x = scale * rng.normal();
    b.fill(0.0);
}

Tensor ConvTranspose1d::forward(const Tensor& x, Cache* cache) const {
    if (x.rows != in_ch) throw std::invalid_argument("ConvTranspose1d: channel mismatch");
    if (cache) cache->x = x;
    const int T = x.cols;
    const int T_out = T * stride;
    const int trim_left = (kernel - stride) / 2;

    Tensor y(out_ch, T_out);
    for (int o = 0; o < out_ch; ++o) {
        double* yo = y.row(o);
        for (int j = 0; j < T_out; ++j) yo[j] = b.at(o, 0);
        const double* wo = w.row(o);
        for (int i = 0; i < in_ch; ++i) {
            const double* xr = x.row(i);
            for (int t = 0; t < kernel; ++t) {
                const double wv = wo[i * kernel + t];
                if (wv == 0.0) continue;
                const int off = t - trim_left;
                for (int tau = 0; tau < T; ++tau) {
                    const int j = tau * stride + off;
                    if (j >= 0 && j < T_out) yo[j] += wv * xr[tau];
                }
            }
        }
    }
    return y;
}

Tensor ConvTranspose1d::backward(const Cache& cache, const Tensor& dy) {
    const Tensor& x = cache.x;
    const int T = x.cols;
    const int T_out = T * stride;
    const int trim_left = (kernel - stride) / 2;
    if (dy.rows != out_ch || dy.cols != T_out)
        throw std::invalid_argument("ConvTranspose1d backward: gradient shape mismatch");

    Tensor dx(in_ch, T);
    for (int o = 0; o < out_ch; ++o) {
        const double* dyo = dy.row(o);
        const double* wo = w.row(o);
        double* dwo = dw.row(o);
        double bias_acc = 0.0;
        for (int j = 0; j < T_out; ++j) bias_acc += dyo[j];
        db.at(o, 0) += bias_acc;
        for (int i = 0; i < in_ch; ++i) {
            const double* xr = x.row(i);
            double* dxr = dx.row(i);
            for (int t = 0; t < kernel; ++t) {
                const int off = t - trim_left;
                const double wv = wo[i * kernel + t];
                double wacc = 0.0;
                for (int tau = 0; tau < T; ++tau) {
                    const int j = tau * stride + off;
                    if (j < 0 || j >= T_out) continue;
                    const double g = dyo[j];
                    wacc += g * xr[tau];
                    dxr[tau] += g * wv;
                }
                dwo[i * kernel + t] += wacc;
            }
        }
    }
    return dx;
}

void ConvTranspose1d::params(ParamList& out, const std::string& prefix) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
}

// ---------------------------------------------------------------------------
// SnakeLayer

SnakeLayer::SnakeLayer(int channels_, SnakeMode mode_) : channels(channels_), mode(mode_) {
    if (channels_ <= 0) throw std::invalid_argument("SnakeLayer: non-positive channel count");
    log_alpha = Tensor(channels_, 1);
    log_beta = Tensor(channels_, 1);
    gamma = Tensor(channels_, 1);
    d_log_alpha = Tensor(channels_, 1);
    d_log_beta = Tensor(channels_, 1);
    d_gamma = Tensor(channels_, 1);
}

SnakeParams SnakeLayer::effective_params() const {
    SnakeParams p;
    p.alpha.resize(channels);
    p.beta.resize(channels);
    p.gamma.resize(channels);
    for (int c = 0; c < channels; ++c) {
        p.alpha[c] = std::exp(log_alpha.at(c, 0));
        p.beta[c] = mode == SnakeMode::vanilla ? 1.0 : std::exp(log_beta.at(c, 0));
        p.gamma[c] = mode == SnakeMode::amplitude_bias ? gamma.at(c, 0) : 0.0;
    }
    return p;
}

Tensor SnakeLayer::forward(const Tensor& x, Cache* cache) const {
    if (x.rows != channels) throw std::invalid_argument("SnakeLayer: channel mismatch");
    if (cache) cache->x = x;
    return snake_forward(x, effective_params());
}

Tensor SnakeLayer::backward(const Cache& cache, const Tensor& dy) {
    const Tensor& x = cache.x;
    if (!dy.same_shape(x)) throw std::invalid_argument("SnakeLayer backward: shape mismatch");
    const SnakeParams p = effective_params();

    Tensor dx(x.rows, x.cols);
    for (int c = 0; c < channels; ++c) {
        const double a = p.alpha[c], bt = p.beta[c];
        const double* xr = x.row(c);
        const double* gr = dy.row(c);
        double* dxr = dx.row(c);
        double acc_la = 0.0, acc_lb = 0.0, acc_g = 0.0;
        for (int t = 0; t < x.cols; ++t) {
            const double s = std::sin(a * xr[t]);
            const double s2ax = std::sin(2.0 * a * xr[t]);
            const double g = gr[t];
            dxr[t] = g * (1.0 + bt * s2ax);
            acc_la += g * bt * (xr[t] * s2ax - s * s / a);
            acc_lb += g * (bt / a) * s * s;
            acc_g += g;
        }
        d_log_alpha.at(c, 0) += acc_la;
        if (mode != SnakeMode::vanilla) d_log_beta.at(c, 0) += acc_lb;
        if (mode == SnakeMode::amplitude_bias) d_gamma.at(c, 0) += acc_g;
    }
    return dx;
}

void SnakeLayer::params(ParamList& out, const std::string& prefix) {
    out.push_back({prefix + ".log_alpha", &log_alpha, &d_log_alpha});
    if (mode != SnakeMode::vanilla) out.push_back({prefix + ".log_beta", &log_beta, &d_log_beta});
    if (mode == SnakeMode::amplitude_bias) out.push_back({prefix + ".gamma", &gamma, &d_gamma});
}

// ---------------------------------------------------------------------------
// MRFBlock

MRFBlock::MRFBlock(int channels_, const std::vector<int>& kernels,
                   const std::vector<int>& dilations, SnakeMode mode)
    : channels(channels_) {
    if (kernels.empty() || kernels.size() != dilations.size())
        throw std::invalid_argument("MRFBlock: kernel/dilation lists must be non-empty and equal length");
    for (size_t i = 0; i < kernels.size(); ++i) {
        if (kernels[i] % 2 == 0)
            throw std::invalid_argument("MRFBlock: even kernel size (same-padding needs odd)");
        acts.emplace_back(channels_, mode);
        convs.emplace_back(channels_, channels_, kernels[i], 1, dilations[i], 1, PadMode::same);
    }
}

void MRFBlock::init(Rng& rng) {
    for (Conv1d& c : convs) c.init(rng);
}

Tensor MRFBlock::forward(const Tensor& x, Cache* cache) const {
    if (x.rows != channels) throw std::invalid_argument("MRFBlock: channel mismatch");
    if (cache) {
        cache->act.resize(acts.size());
        cache->conv.resize(convs.size());
    }
    const double inv_b = 1.0 / static_cast<double>(convs.size());
    Tensor y = x; // the averaged residual terms collapse to one x
    for (size_t i = 0; i < convs.size(); ++i) {
        const Tensor s = acts[i].forward(x, cache ? &cache->act[i] : nullptr);
        const Tensor c = convs[i].forward(s, cache ? &cache->conv[i] : nullptr);
        for (size_t j = 0; j < y.v.size(); ++j) y.v[j] += inv_b * c.v[j];
    }
    return y;
}

Tensor MRFBlock::backward(const Cache& cache, const Tensor& dy) {
    if (cache.act.size() != acts.size() || cache.conv.size() != convs.size())
        throw std::invalid_argument("MRFBlock backward: missing cache");
    const double inv_b = 1.0 / static_cast<double>(convs.size());
    Tensor dx = dy;
    Tensor scaled = dy;
    scale_inplace(scaled, inv_b);
    for (size_t i = 0; i < convs.size(); ++i) {
        const Tensor ds = convs[i].backward(cache.conv[i], scaled);
        const Tensor dxi = acts[i].backward(cache.act[i], ds);
        add_inplace(dx, dxi);
    }
    return dx;
}

void MRFBlock::params(ParamList& out, const std::string& prefix) {
    for (size_t i = 0; i < convs.size(); ++i) {
        acts[i].params(out, prefix + ".branch" + std::to_string(i) + ".snake");
        convs[i].params(out, prefix + ".branch" + std::to_string(i) + ".conv");
    }
}

// ---------------------------------------------------------------------------
// InvertedBottleneck

InvertedBottleneck::InvertedBottleneck(int channels_, int expansion_, int groups_, SnakeMode mode)
    : channels(channels_), expansion(expansion_), groups(groups_) {
    if (channels_ <= 0 || expansion_ < 1)
        throw std::invalid_argument("InvertedBottleneck: bad channel/expansion");
    if (channels_ % groups_ != 0)
        throw std::invalid_argument("InvertedBottleneck: channels not divisible by groups");
    expand = Conv1d(channels_, expansion_ * channels_, 1, 1, 1, groups_, PadMode::same);
    act = SnakeLayer(expansion_ * channels_, mode);
    project = Conv1d(expansion_ * channels_, channels_, 1, 1, 1, 1, PadMode::same);
}

void InvertedBottleneck::init(Rng& rng) {
    expand.init(rng);
    project.init(rng);
}

Tensor InvertedBottleneck::forward(const Tensor& x, Cache* cache) const {
    const Tensor e = expand.forward(x, cache ? &cache->expand : nullptr);
    const Tensor s = act.forward(e, cache ? &cache->act : nullptr);
    Tensor y = project.forward(s, cache ? &cache->project : nullptr);
    add_inplace(y, x);
    return y;
}

Tensor InvertedBottleneck::backward(const Cache& cache, const Tensor& dy) {
    const Tensor ds = project.backward(cache.project, dy);
    const Tensor de = act.backward(cache.act, ds);
    Tensor dx = expand.backward(cache.expand, de);
    add_inplace(dx, dy);
    return dx;
}

void InvertedBottleneck::params(ParamList& out, const std::string& prefix) {
    expand.params(out, prefix + ".expand");
    act.params(out, prefix + ".snake");
    project.params(out, prefix + ".project");
}

} // namespace mbsc
