// Acceptance harness: one line per criterion, exit code = number of failures.
// Each criterion is independent except where noted (5/6/10 share one trained
// corpus, so the quantizer is fitted once and interrogated three ways).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mbsc/band.hpp"
#include "mbsc/bitstream.hpp"
#include "mbsc/codebook.hpp"
#include "mbsc/mel_loss.hpp"
#include "mbsc/metrics.hpp"
#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"
#include "mbsc/rng.hpp"
#include "mbsc/snake.hpp"
#include "mbsc/synthetic.hpp"
#include "mbsc/tensor.hpp"
#include "mbsc/trainer.hpp"

using namespace mbsc;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Tensor rand_tensor(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(r, c);
    for (double& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

// ---------------------------------------------------------------------------
// 1. The banded projections of the default plan must sum back to the input.

Outcome c1_band_partition() {
    Rng rng(101);
    Tensor z = rand_tensor(32, 512, rng);
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    Tensor sum(z.rows, z.cols);
    for (size_t k = 0; k < plan.bands.size(); ++k)
        add_inplace(sum, band_project(z, stage_band(plan, k), plan.latent_rate));
    const double err = max_abs_diff(sum, z);
    return {err < 1e-9, fmt("max |sum of bands - z| = %.3g over 32x512", err)};
}

// ---------------------------------------------------------------------------
// 2. The three published stride/stage combinations, bit for bit.

Outcome c2_bitrate_rows() {
    struct Row {
        std::vector<int> strides;
        int stages, bits;
        uint32_t num, den;
        double frame_rate, tokens, bps;
    };
    const Row rows[] = {
        {{2, 4, 5, 8}, 4, 9, 75, 1, 75.0, 300.0, 2700.0},
        {{4, 5, 6, 8}, 6, 9, 25, 1, 25.0, 150.0, 1350.0},
        {{3, 5, 8, 16}, 8, 9, 25, 2, 12.5, 100.0, 900.0},
    };
    for (const Row& r : rows) {
        ModelConfig cfg;
        cfg.strides = r.strides;
        BitrateInfo b = bitrate(cfg, r.stages, r.bits);
        if (b.frame_rate_num != r.num || b.frame_rate_den != r.den || b.frame_rate != r.frame_rate ||
            b.tokens_per_second != r.tokens || b.bits_per_second != r.bps)
            return {false, fmt("strides product %d: got %g Hz / %g tok/s / %g bit/s",
                               cfg.downsampling(), b.frame_rate, b.tokens_per_second,
                               b.bits_per_second)};
    }
    return {true, "75/300/2700, 25/150/1350, 12.5/100/900 all exact"};
}

// ---------------------------------------------------------------------------
// 3. Snake: analytic derivative vs central differences, and the slope bound.

Outcome c3_snake() {
    Rng rng(303);
    double worst_rel = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-4.0, 4.0);
        const double a = rng.uniform(0.1, 3.0);
        const double b = rng.uniform(-2.0, 2.0);
        const double g = rng.uniform(-1.0, 1.0);
        const double h = 1e-6;
        const double fd = (snake_scalar(x + h, a, b, g) - snake_scalar(x - h, a, b, g)) / (2.0 * h);
        const double an = snake_derivative_scalar(x, a, b);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        worst_rel = std::max(worst_rel, rel);
    }
    if (worst_rel >= 1e-6)
        return {false, fmt("derivative mismatch: worst relative error %.3g", worst_rel)};

    double worst_excess = -1.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.uniform(0.1, 3.0);
        const double b = rng.uniform(-2.0, 2.0);
        const double g = rng.uniform(-1.0, 1.0);
        const double bound = 1.0 + std::abs(b) + 1e-9;
        for (int i = 0; i < 5000; ++i) {
            const double x1 = rng.uniform(-20.0, 20.0);
            double x2 = rng.uniform(-20.0, 20.0);
            if (x1 == x2) x2 += 0.5;
            const double slope =
                std::abs(snake_scalar(x2, a, b, g) - snake_scalar(x1, a, b, g)) / std::abs(x2 - x1);
            worst_excess = std::max(worst_excess, slope - bound);
        }
    }
    return {worst_excess <= 0.0,
            fmt("derivative rel err %.2g; worst secant slope excess %.3g over 1e5 pairs",
                worst_rel, worst_excess)};
}

// ---------------------------------------------------------------------------
// 4. EMA codebook vs the generator means and vs batch k-means, same seeds.
//
// 512 unit-variance Gaussian clusters on a 23x23 lattice with 10-sigma
// spacing. Noise is drawn antithetically (+e / -e) and truncated at 4 sigma,
// so every sample provably stays on its own side of the 5-sigma midplane and
// each cluster's empirical mean equals its generator mean to rounding.
// Minibatches always contain whole pairs, so every batch a code absorbs has
// its cluster mean as the exact average; the only EMA bias left is the
// decaying weight of the seed point.

Outcome c4_ema_oracle() {
    const int K = 512, d = 2, grid = 23;
    const double spacing = 10.0;
    const int pairs_per_cluster = 98; // 512 * 98 * 2 = 100,352 samples
    const int n_per_cluster = 2 * pairs_per_cluster;
    Rng rng(404);

    Tensor mu(K, d);
    for (int c = 0; c < K; ++c) {
        mu.at(c, 0) = spacing * (c % grid);
        mu.at(c, 1) = spacing * (c / grid);
    }

    auto draw = [&]() {
        double e = rng.normal();
        while (std::abs(e) > 4.0) e = rng.normal();
        return e;
    };
    Tensor samples(K * n_per_cluster, d); // cluster-major, pair members adjacent
    for (int c = 0; c < K; ++c)
        for (int p = 0; p < pairs_per_cluster; ++p) {
            const double e0 = draw(), e1 = draw();
            double* a = samples.row(c * n_per_cluster + 2 * p);
            double* b = samples.row(c * n_per_cluster + 2 * p + 1);
            a[0] = mu.at(c, 0) + e0;
            a[1] = mu.at(c, 1) + e1;
            b[0] = mu.at(c, 0) - e0;
            b[1] = mu.at(c, 1) - e1;
        }

    Tensor seeds(K, d);
    for (int c = 0; c < K; ++c)
        for (int j = 0; j < d; ++j) seeds.at(c, j) = samples.at(c * n_per_cluster, j);

    Codebook cb = make_codebook(seeds);
    const int pairs_per_step = 2, steps_per_epoch = pairs_per_cluster / pairs_per_step;
    const int epochs = 11; // decays the seed weight to under one percent
    const int batch_rows = K * pairs_per_step * 2;
    Tensor batch(batch_rows, d);
    std::vector<int> idx(batch_rows);
    for (int ep = 0; ep < epochs; ++ep)
        for (int s = 0; s < steps_per_epoch; ++s) {
            int r = 0;
            for (int c = 0; c < K; ++c)
                for (int p = 0; p < pairs_per_step * 2; ++p, ++r) {
                    const double* src = samples.row(c * n_per_cluster + s * pairs_per_step * 2 + p);
                    batch.at(r, 0) = src[0];
                    batch.at(r, 1) = src[1];
                }
            for (int j = 0; j < batch_rows; ++j)
                idx[j] = nearest_code(cb, batch.row(j), d).first;
            ema_update(cb, idx, batch);
        }

    Tensor lloyd = lloyd_kmeans(samples, seeds, 50);

    double worst_mu = 0.0, worst_lloyd = 0.0;
    for (int c = 0; c < K; ++c) {
        double dm = 0.0, dl = 0.0;
        for (int j = 0; j < d; ++j) {
            dm += (cb.vectors.at(c, j) - mu.at(c, j)) * (cb.vectors.at(c, j) - mu.at(c, j));
            dl += (cb.vectors.at(c, j) - lloyd.at(c, j)) * (cb.vectors.at(c, j) - lloyd.at(c, j));
        }
        worst_mu = std::max(worst_mu, std::sqrt(dm));
        worst_lloyd = std::max(worst_lloyd, std::sqrt(dl));
    }
    return {worst_mu < 0.05 && worst_lloyd < 0.05,
            fmt("worst |code - mean| = %.4f sigma, |code - kmeans| = %.4f sigma (tol 0.05)",
                worst_mu, worst_lloyd)};
}

// ---------------------------------------------------------------------------
// Shared corpus for 5/6/10: latents composed of three fixed channel profiles,
// each riding a scalar envelope built from on-grid cosines confined to one
// band of the default plan, plus a small broadband term for the residual
// stage to absorb. Columns of each banded part live near a one-dimensional
// manifold, so modest codebooks quantize them accurately.

struct BandedCorpus {
    BandPlan plan = make_band_plan(75.0, {4, 2, 1}, 1);
    int dim = 8, frames = 64;
    std::vector<Tensor> train, held;
};

BandedCorpus make_banded_corpus(Rng& rng) {
    BandedCorpus c;
    const int d = c.dim, T = c.frames;
    Tensor profiles(3, d);
    for (int b = 0; b < 3; ++b) {
        double norm = 0.0;
        for (int i = 0; i < d; ++i) {
            profiles.at(b, i) = rng.normal();
            norm += profiles.at(b, i) * profiles.at(b, i);
        }
        norm = std::sqrt(norm);
        for (int i = 0; i < d; ++i) profiles.at(b, i) /= norm;
    }
    // DFT-grid bins of a length-64 row at 75 Hz: bin k sits at k * 75 / 64 Hz,
    // so 1..7 fall in [0, 9.375), 8..15 in [9.375, 18.75), 16..31 below Nyquist.
    const int bin_lo[3] = {1, 8, 16}, bin_hi[3] = {7, 15, 31};
    const double amp[3] = {1.0, 0.8, 0.6};
    auto segment = [&]() {
        Tensor z(d, T);
        for (int b = 0; b < 3; ++b) {
            std::vector<double> s(T, 0.0);
            for (int h = 0; h < 3; ++h) {
                const int k = bin_lo[b] + static_cast<int>(rng.index(bin_hi[b] - bin_lo[b] + 1));
                const double phase = rng.uniform(0.0, 2.0 * kPi);
                const double a = rng.uniform(0.5, 1.0);
                for (int t = 0; t < T; ++t) s[t] += a * std::cos(2.0 * kPi * k * t / T + phase);
            }
            for (int i = 0; i < d; ++i)
                for (int t = 0; t < T; ++t) z.at(i, t) += amp[b] * profiles.at(b, i) * s[t];
        }
        for (double& x : z.v) x += 0.05 * rng.normal();
        return z;
    };
    for (int i = 0; i < 150; ++i) c.train.push_back(segment());
    for (int i = 0; i < 30; ++i) c.held.push_back(segment());
    return c;
}

QuantizerStack train_stack(const BandedCorpus& c, QuantizerMode mode, Rng& rng) {
    QuantizerStack q = make_quantizer_stack(c.plan, c.dim, 6, mode);
    seed_codebooks(q, c.train, rng);
    const int T = c.frames;
    std::vector<int> idx(T);
    Tensor pts(T, c.dim);
    for (int epoch = 0; epoch < 4; ++epoch)
        for (const Tensor& z : c.train) {
            EncodeResult r =
                mode == QuantizerMode::mbs ? mbs_rvq_encode(z, q) : vanilla_rvq_encode(z, q);
            for (size_t k = 0; k < q.n_stages(); ++k) {
                for (int t = 0; t < T; ++t) {
                    idx[t] = r.tokens.index(t, static_cast<int>(k));
                    for (int i = 0; i < c.dim; ++i) pts.at(t, i) = r.trace.band_inputs[k].at(i, t);
                }
                ema_update(q.codebooks[k], idx, pts);
                revive_dead_codes(q.codebooks[k], pts, rng);
            }
        }
    return q;
}

struct SharedQuantizers {
    BandedCorpus corpus;
    QuantizerStack mbs, vanilla;
};

SharedQuantizers& shared_quantizers() {
    static std::unique_ptr<SharedQuantizers> s;
    if (!s) {
        Rng rng(555);
        s = std::make_unique<SharedQuantizers>();
        s->corpus = make_banded_corpus(rng);
        s->mbs = train_stack(s->corpus, QuantizerMode::mbs, rng);
        s->vanilla = train_stack(s->corpus, QuantizerMode::vanilla, rng);
    }
    return *s;
}

// Mean squared reconstruction error over the held-out set using the first
// `upto` stages.
double heldout_mse(const BandedCorpus& c, QuantizerStack& q, int upto) {
    std::vector<int> stages(upto);
    for (int k = 0; k < upto; ++k) stages[k] = k + 1;
    double acc = 0.0;
    size_t n = 0;
    for (const Tensor& z : c.held) {
        EncodeResult r = q.mode == QuantizerMode::mbs ? mbs_rvq_encode(z, q)
                                                      : vanilla_rvq_encode(z, q);
        Tensor rec = subset_decode(r.tokens, q, stages);
        for (size_t i = 0; i < z.v.size(); ++i) acc += (z.v[i] - rec.v[i]) * (z.v[i] - rec.v[i]);
        n += z.v.size();
    }
    return acc / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// 5. Adding residual stages never increases held-out reconstruction error.

Outcome c5_rvq_monotonic() {
    SharedQuantizers& s = shared_quantizers();
    std::ostringstream out;
    bool pass = true;
    for (QuantizerStack* q : {&s.mbs, &s.vanilla}) {
        double prev = 0.0;
        out << (q->mode == QuantizerMode::mbs ? "banded:" : " plain:");
        for (int k = 1; k <= 4; ++k) {
            const double mse = heldout_mse(s.corpus, *q, k);
            out << fmt(" %.4f", mse);
            if (k > 1 && mse > prev + 1e-9) pass = false;
            prev = mse;
        }
        out << "  ";
    }
    return {pass, out.str()};
}

// ---------------------------------------------------------------------------
// 6. Banded stages keep >= 90% of quantized energy in their band; plain
// residual quantization leaks >= 20% of stage 1 out of the low band.

Outcome c6_band_confinement() {
    SharedQuantizers& s = shared_quantizers();
    const BandPlan& plan = s.corpus.plan;
    const size_t banded = plan.bands.size();
    std::vector<double> in_energy(banded, 0.0), total(banded, 0.0);
    double v_in = 0.0, v_total = 0.0;
    for (const Tensor& z : s.corpus.held) {
        EncodeResult r = mbs_rvq_encode(z, s.mbs);
        for (size_t k = 0; k < banded; ++k) {
            double e = 0.0;
            for (double x : r.trace.quantized[k].v) e += x * x;
            in_energy[k] +=
                e * band_energy_fraction(r.trace.quantized[k], stage_band(plan, k), plan.latent_rate);
            total[k] += e;
        }
        EncodeResult rv = vanilla_rvq_encode(z, s.vanilla);
        double e = 0.0;
        for (double x : rv.trace.quantized[0].v) e += x * x;
        v_in += e * band_energy_fraction(rv.trace.quantized[0], stage_band(plan, 0),
                                         plan.latent_rate);
        v_total += e;
    }
    std::ostringstream out;
    bool pass = true;
    out << "in-band:";
    for (size_t k = 0; k < banded; ++k) {
        const double frac = in_energy[k] / total[k];
        out << fmt(" %.3f", frac);
        if (frac < 0.90) pass = false;
    }
    const double v_out = 1.0 - v_in / v_total;
    out << fmt("  plain stage-1 out-of-band: %.3f", v_out);
    if (v_out < 0.20) pass = false;
    return {pass, out.str()};
}

// ---------------------------------------------------------------------------
// 7. Every parameter gradient of a small encoder-quantizer-decoder graph
// against central differences, then exact straight-through equality between
// the quantized graph (perfect codebook) and the identity graph.

Outcome c7_gradcheck() {
    ModelConfig cfg;
    cfg.strides = {2, 3};
    cfg.base_channels = 6;
    cfg.latent_dim = 6;
    cfg.mrf_kernels = {3};
    cfg.mrf_dilations = {1};
    cfg.bottleneck_expansion = 2;
    cfg.conv_groups = 2;
    Model model(cfg);
    Rng rng(707);
    model.init(rng);
    const size_t n_params = model.parameter_count();
    if (n_params > 10000) return {false, fmt("graph has %zu parameters (> 10k)", n_params)};

    const int L = 768; // 128 latent frames
    std::vector<double> x(L);
    for (int i = 0; i < L; ++i)
        x[i] = 0.4 * std::sin(2.0 * kPi * 440.0 * i / cfg.sample_rate) + 0.05 * rng.normal();
    Tensor xt(1, L);
    for (int i = 0; i < L; ++i) xt.at(0, i) = x[i];

    BandPlan plan = make_band_plan(cfg.latent_rate(), {4, 2, 1}, 1);
    QuantizerStack stack = make_quantizer_stack(plan, cfg.latent_dim, 4);
    for (Codebook& cb : stack.codebooks) cb = make_codebook(rand_tensor(16, cfg.latent_dim, rng));
    MultiScaleMelLoss mel(cfg.sample_rate, {7, 8});
    const double lambda = 0.25;

    // Token choices frozen at the base point keep the loss smooth in theta.
    TokenStream tokens = mbs_rvq_encode(model.encoder.forward(xt), stack).tokens;

    auto loss_at = [&]() {
        Tensor z = model.encoder.forward(xt);
        EncodeTrace tr = pinned_trace(z, stack, tokens);
        Tensor y = model.decoder.forward(z);
        std::vector<double> yhat(y.row(0), y.row(0) + y.cols);
        MelLossReport rep = mel.evaluate(yhat, x);
        return rep.total + lambda * commitment_loss(tr, stack.commit_weights);
    };

    ParamList params = model.parameters();
    zero_grads(params);
    Encoder::Cache ec;
    Decoder::Cache dc;
    Tensor z = model.encoder.forward(xt, &ec);
    EncodeTrace tr = pinned_trace(z, stack, tokens);
    Tensor y = model.decoder.forward(z, &dc);
    std::vector<double> yhat(y.row(0), y.row(0) + y.cols), gmel;
    mel.evaluate(yhat, x, &gmel);
    Tensor dy(1, L);
    for (int i = 0; i < L; ++i) dy.at(0, i) = gmel[i];
    Tensor dz = model.decoder.backward(dc, dy);
    Tensor dcommit = commitment_backward(tr, stack);
    for (size_t i = 0; i < dz.v.size(); ++i) dz.v[i] += lambda * dcommit.v[i];
    model.encoder.backward(ec, dz);

    // Richardson-extrapolated central differences: the plain h^2 stencil
    // leaves ~1e-4 truncation error on this loss, right at the tolerance.
    const double h = 1e-5;
    double worst = 0.0;
    std::string worst_name;
    for (const ParamRef& p : params)
        for (size_t j = 0; j < p.value->v.size(); ++j) {
            const double orig = p.value->v[j];
            p.value->v[j] = orig + h;
            const double lp = loss_at();
            p.value->v[j] = orig - h;
            const double lm = loss_at();
            p.value->v[j] = orig + h / 2.0;
            const double lp2 = loss_at();
            p.value->v[j] = orig - h / 2.0;
            const double lm2 = loss_at();
            p.value->v[j] = orig;
            const double fd = (4.0 * (lp2 - lm2) / h - (lp - lm) / (2.0 * h)) / 3.0;
            const double an = p.grad->v[j];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
            if (rel > worst) {
                worst = rel;
                worst_name = p.name;
            }
        }
    if (worst >= 1e-4)
        return {false, fmt("finite differences disagree: %.3g relative at %s (%zu params)", worst,
                           worst_name.c_str(), n_params)};

    // Straight-through leg: a single full-band stage whose codebook holds the
    // exact latent columns reconstructs z bit for bit, so the quantized graph
    // must produce bitwise-identical parameter gradients to the identity one.
    auto run_leg = [&](bool through_quantizer) {
        zero_grads(params);
        Encoder::Cache e2;
        Decoder::Cache d2;
        Tensor zl = model.encoder.forward(xt, &e2);
        Tensor dec_in = zl;
        QuantizerStack perfect =
            make_quantizer_stack(make_band_plan(cfg.latent_rate(), {1}, 0), cfg.latent_dim, 7);
        if (through_quantizer) {
            Tensor codes(zl.cols, zl.rows);
            for (int t = 0; t < zl.cols; ++t)
                for (int i = 0; i < zl.rows; ++i) codes.at(t, i) = zl.at(i, t);
            perfect.codebooks[0] = make_codebook(codes);
            EncodeResult r = mbs_rvq_encode(zl, perfect);
            if (r.quantized.v != zl.v) return false;
            dec_in = r.quantized;
        }
        Tensor yl = model.decoder.forward(dec_in, &d2);
        std::vector<double> yv(yl.row(0), yl.row(0) + yl.cols), g;
        mel.evaluate(yv, x, &g);
        Tensor dyl(1, L);
        for (int i = 0; i < L; ++i) dyl.at(0, i) = g[i];
        Tensor dzl = model.decoder.backward(d2, dyl);
        if (through_quantizer) dzl = ste_backward(dzl, zl);
        model.encoder.backward(e2, dzl);
        return true;
    };
    if (!run_leg(false)) return {false, "identity leg failed"};
    std::vector<std::vector<double>> identity_grads;
    for (const ParamRef& p : params) identity_grads.push_back(p.grad->v);
    if (!run_leg(true)) return {false, "perfect codebook failed to reproduce the latents exactly"};
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].grad->v != identity_grads[i])
            return {false, fmt("straight-through gradients differ at %s", params[i].name.c_str())};

    return {true, fmt("%zu params, worst FD rel err %.3g; straight-through bitwise equal",
                      n_params, worst)};
}

// ---------------------------------------------------------------------------
// 8. Two hundred seeded steps on a fixed batch of sinusoid mixtures must at
// least halve the mel term.

Outcome c8_training_smoke() {
    ModelConfig cfg; // desk-scale defaults
    Model model(cfg);
    Rng rng(808);
    model.init(rng);
    BandPlan plan = make_band_plan(cfg.latent_rate(), {4, 2, 1}, 1);
    QuantizerStack stack = make_quantizer_stack(plan, cfg.latent_dim, 9);
    TrainerConfig tcfg;
    tcfg.adam.lr = 3e-3; // 200 steps is short; the default rate only gets a third of the way
    tcfg.lambda_commit = 0.05;
    Trainer trainer(model, stack, tcfg, 4242);

    SyntheticConfig scfg;
    scfg.max_tones = 2;
    scfg.am_probability = 0.0;
    scfg.noise_floor = 1e-4;
    Rng gen(909);
    std::vector<std::vector<double>> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(synthetic_segment(gen, 24000, 3200, scfg).samples);

    double first = 0.0, last = 0.0;
    for (int step = 1; step <= 200; ++step) {
        TrainStepReport rep = trainer.step(batch);
        if (step == 1) first = rep.mel;
        last = rep.mel;
    }
    const double reduction = 1.0 - last / first;
    return {last <= 0.5 * first,
            fmt("mel %.4f -> %.4f (%.0f%% reduction, need >= 50%%)", first, last,
                100.0 * reduction)};
}

// ---------------------------------------------------------------------------
// 9. Random streams must survive serialize/deserialize/serialize untouched,
// and the committed golden files must parse to known fields and re-serialize
// to their exact bytes.

std::vector<uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

Outcome c9_bitstream() {
    Rng rng(909);
    for (int trial = 0; trial < 1000; ++trial) {
        TokenStream t;
        t.n_stages = 1 + static_cast<int>(rng.index(8));
        t.bits = 1 + static_cast<int>(rng.index(16));
        t.frames = static_cast<int>(rng.index(41));
        const uint32_t dens[] = {1, 1, 2, 4};
        StreamHeader h;
        h.sample_rate = 8000 + static_cast<uint32_t>(rng.index(40001));
        h.frame_rate_den = dens[rng.index(4)];
        h.frame_rate_num = 1 + static_cast<uint32_t>(rng.index(200));
        h.n_stages = static_cast<uint8_t>(t.n_stages);
        h.bits_per_code = static_cast<uint8_t>(t.bits);
        h.frame_count = static_cast<uint32_t>(t.frames);
        for (auto& byte : h.config_hash) byte = static_cast<uint8_t>(rng.index(256));
        t.frame_rate = static_cast<double>(h.frame_rate_num) / h.frame_rate_den;
        t.indices.resize(static_cast<size_t>(t.frames) * t.n_stages);
        const uint32_t top = t.bits >= 16 ? 65536u : (1u << t.bits);
        for (auto& i : t.indices) i = static_cast<uint16_t>(rng.index(top));

        const std::vector<uint8_t> bytes = serialize(t, h);
        auto [t2, h2] = deserialize(bytes);
        if (!(h2 == h) || t2.indices != t.indices || t2.n_stages != t.n_stages ||
            t2.bits != t.bits || t2.frames != t.frames || t2.frame_rate != t.frame_rate)
            return {false, fmt("round trip diverged on trial %d", trial)};
        if (serialize(t2, h2) != bytes)
            return {false, fmt("re-serialization diverged on trial %d", trial)};
    }

    const std::string dir = MBSC_GOLDEN_DIR;
    {
        const std::vector<uint8_t> bytes = slurp(dir + "/single_max_code.mbst");
        auto [t, h] = deserialize(bytes);
        if (h.sample_rate != 24000 || h.frame_rate_num != 75 || h.frame_rate_den != 1 ||
            h.n_stages != 1 || h.bits_per_code != 9 || h.frame_count != 1 ||
            config_hash_fnv(h.config_hash) != 0x12345678u ||
            config_hash_samples(h.config_hash) != 320 || t.indices != std::vector<uint16_t>{511})
            return {false, "single_max_code.mbst fields drifted"};
        if (serialize(t, h) != bytes) return {false, "single_max_code.mbst bytes drifted"};
    }
    {
        const std::vector<uint8_t> bytes = slurp(dir + "/two_stage_three_frame.mbst");
        auto [t, h] = deserialize(bytes);
        if (h.sample_rate != 16000 || h.frame_rate_num != 25 || h.frame_rate_den != 2 ||
            h.n_stages != 2 || h.bits_per_code != 3 || h.frame_count != 3 ||
            config_hash_fnv(h.config_hash) != 0xDEADBEEFu ||
            config_hash_samples(h.config_hash) != 999 ||
            t.indices != std::vector<uint16_t>{1, 2, 3, 4, 5, 6})
            return {false, "two_stage_three_frame.mbst fields drifted"};
        if (serialize(t, h) != bytes) return {false, "two_stage_three_frame.mbst bytes drifted"};
    }
    return {true, "1000 random round trips and both golden files byte-stable"};
}

// ---------------------------------------------------------------------------
// 10. Subset decodes add up exactly, and the per-stage error curve on
// training-distribution data steps strictly downward at least once.

Outcome c10_subset_ablation() {
    SharedQuantizers& s = shared_quantizers();
    for (const Tensor& z : s.corpus.held) {
        EncodeResult r = mbs_rvq_encode(z, s.mbs);
        Tensor d1 = subset_decode(r.tokens, s.mbs, {1});
        Tensor d2 = subset_decode(r.tokens, s.mbs, {2});
        Tensor d12 = subset_decode(r.tokens, s.mbs, {1, 2});
        add_inplace(d1, d2);
        if (d1.v != d12.v) return {false, "decode({1}) + decode({2}) != decode({1,2})"};
    }
    double prev = heldout_mse(s.corpus, s.mbs, 1);
    bool strict = false;
    std::ostringstream out;
    out << fmt("mse by stages: %.4f", prev);
    for (int k = 2; k <= 4; ++k) {
        const double mse = heldout_mse(s.corpus, s.mbs, k);
        out << fmt(" %.4f", mse);
        if (mse > prev + 1e-9) return {false, out.str() + "  (error increased)"};
        if (mse < prev) strict = true;
        prev = mse;
    }
    return {strict, out.str() + (strict ? "" : "  (never strictly decreased)")};
}

// ---------------------------------------------------------------------------
// 11. Token entropy never exceeds the allocated 9 bits per stage, and the
// entropy report keeps bound <= sum H <= sum R with nonnegative offsets.

Outcome c11_entropy_bounds() {
    Rng rng(111);
    double worst_h = 0.0;
    // Random streams, including a perfectly uniform one that hits H = 9.
    for (int trial = 0; trial < 20; ++trial) {
        TokenStream t;
        t.n_stages = 4;
        t.bits = 9;
        t.frames = 256 + static_cast<int>(rng.index(512));
        t.indices.resize(static_cast<size_t>(t.frames) * t.n_stages);
        for (auto& i : t.indices) i = static_cast<uint16_t>(rng.index(512));
        TokenStatistics st = token_statistics(t);
        for (double h : st.entropy_bits) worst_h = std::max(worst_h, h);
    }
    {
        TokenStream t;
        t.n_stages = 1;
        t.bits = 9;
        t.frames = 512;
        t.indices.resize(512);
        for (int i = 0; i < 512; ++i) t.indices[i] = static_cast<uint16_t>(i);
        worst_h = std::max(worst_h, token_statistics(t).entropy_bits[0]);
    }
    if (worst_h > 9.0 + 1e-9) return {false, fmt("entropy %.6f bits exceeds 9", worst_h)};

    // Full report on a real encode/decode pair.
    ModelConfig cfg;
    Model model(cfg);
    model.init(rng);
    BandPlan plan = make_band_plan(cfg.latent_rate(), {4, 2, 1}, 1);
    QuantizerStack stack = make_quantizer_stack(plan, cfg.latent_dim, 9);
    Rng gen(112);
    AudioBuffer x = synthetic_segment(gen, cfg.sample_rate, 3200);
    LatentTensor z = encode(x, model);
    std::vector<Tensor> latents{z.values};
    seed_codebooks(stack, latents, rng);
    EncodeResult r = mbs_rvq_encode(z.values, stack);
    AudioBuffer xhat = decode_latent({r.quantized, z.latent_rate}, model);

    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> offsets(4);
        for (double& o : offsets) o = rng.uniform(0.0, 1.5);
        PerceptualEntropyReport rep =
            perceptual_entropy_report(x, xhat, r.tokens, plan, {}, offsets);
        double sum_h = 0.0, sum_r = 0.0, sum_o = 0.0;
        for (double h : rep.entropy_bits) sum_h += h;
        for (double rr : rep.rate_bits) sum_r += rr;
        for (double o : offsets) sum_o += o;
        if (std::abs(rep.total_entropy - sum_h) > 1e-9 || std::abs(rep.total_rate - sum_r) > 1e-9)
            return {false, "report totals disagree with per-stage sums"};
        if (std::abs(rep.bound - (sum_h - sum_o)) > 1e-9)
            return {false, "bound != sum H - sum offsets"};
        if (rep.bound > rep.total_entropy + 1e-9 || rep.total_entropy > rep.total_rate + 1e-9)
            return {false, fmt("inequality chain broken: bound %.3f, H %.3f, R %.3f", rep.bound,
                               rep.total_entropy, rep.total_rate)};
    }
    return {true, fmt("max per-stage entropy %.4f bits; bound <= sum H <= sum R on all runs",
                      worst_h)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
    double budget_s; // 0 = untimed
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "band projections partition the latent spectrum", c1_band_partition, 1.0},
        {2, "bitrate table matches the stride products", c2_bitrate_rows, 0.0},
        {3, "snake derivative and slope bound", c3_snake, 1.0},
        {4, "EMA codebook matches cluster means and batch k-means", c4_ema_oracle, 60.0},
        {5, "added quantizer stages never hurt reconstruction", c5_rvq_monotonic, 0.0},
        {6, "banded stages stay in band, plain RVQ leaks", c6_band_confinement, 0.0},
        {7, "analytic gradients match finite differences", c7_gradcheck, 120.0},
        {8, "training smoke halves the mel loss in 200 steps", c8_training_smoke, 600.0},
        {9, "bitstream round trips and golden bytes", c9_bitstream, 0.0},
        {10, "subset decodes add exactly and errors step down", c10_subset_ablation, 0.0},
        {11, "token entropy stays within the allocated rate", c11_entropy_bounds, 0.0},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0 && secs >= c.budget_s) {
            o.pass = false;
            o.detail += fmt("  [over %.0f s budget]", c.budget_s);
        }
        std::printf("%s  %2d. %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
