#include "mbsc/trainer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mbsc {

Adam::Adam(const ParamList& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
        m_.emplace_back(p.value->rows, p.value->cols);
        v_.emplace_back(p.value->rows, p.value->cols);
    }
}

void Adam::step(const ParamList& params) {
    if (params.size() != m_.size())
        throw std::invalid_argument("Adam: parameter list does not match optimizer state");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& value = *params[i].value;
        const Tensor& grad = *params[i].grad;
        if (!value.same_shape(m_[i]))
            throw std::invalid_argument("Adam: parameter shape changed");
        for (size_t j = 0; j < value.v.size(); ++j) {
            const double g = grad.v[j];
            m_[i].v[j] = cfg_.beta1 * m_[i].v[j] + (1.0 - cfg_.beta1) * g;
            v_[i].v[j] = cfg_.beta2 * v_[i].v[j] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i].v[j] / bc1;
            const double vhat = v_[i].v[j] / bc2;
            value.v[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

namespace {

// Columns of every tensor in `mats`, stacked as rows.
Tensor columns_as_rows(const std::vector<Tensor>& mats) {
    int total = 0;
    const int d = mats.empty() ? 0 : mats.front().rows;
    for (const Tensor& m : mats) total += m.cols;
    Tensor out(total, d);
    int r = 0;
    for (const Tensor& m : mats)
        for (int t = 0; t < m.cols; ++t, ++r)
            for (int c = 0; c < d; ++c) out.at(r, c) = m.at(c, t);
    return out;
}

} // namespace

void seed_codebooks(QuantizerStack& stack, const std::vector<Tensor>& latents, Rng& rng) {
    if (latents.empty()) throw std::invalid_argument("seed_codebooks: empty batch");
    const int d = stack.dim();
    for (const Tensor& z : latents)
        if (z.rows != d) throw std::invalid_argument("seed_codebooks: latent dimension mismatch");

    std::vector<Tensor> residuals = latents;
    std::vector<double> col(static_cast<size_t>(d));
    for (size_t k = 0; k < stack.n_stages(); ++k) {
        // Stage inputs given the codebooks seeded so far.
        std::vector<Tensor> inputs;
        inputs.reserve(residuals.size());
        for (const Tensor& r : residuals) {
            inputs.push_back(stack.mode == QuantizerMode::mbs && stack.plan.is_banded_stage(k)
                                 ? band_project(r, stage_band(stack.plan, k), stack.plan.latent_rate)
                                 : r);
        }
        const Tensor points = columns_as_rows(inputs);
        Codebook& cb = stack.codebooks[k];
        cb.vectors = kmeans_pp_init(points, cb.entries(), rng);
        cb.ema_sums = cb.vectors;
        std::fill(cb.ema_counts.begin(), cb.ema_counts.end(), 1.0);

        // Commit this stage so the next one sees its residuals.
        for (size_t s = 0; s < residuals.size(); ++s) {
            const Tensor& b = inputs[s];
            Tensor& r = residuals[s];
            for (int t = 0; t < b.cols; ++t) {
                for (int row = 0; row < d; ++row) col[row] = b.at(row, t);
                const int idx = nearest_code(cb, col.data(), d).first;
                const double* v = cb.vectors.row(idx);
                for (int row = 0; row < d; ++row) r.at(row, t) -= v[row];
            }
        }
    }
}

Trainer::Trainer(Model& model, QuantizerStack& stack, TrainerConfig cfg, uint64_t seed)
    : model_(model), stack_(stack), cfg_(cfg),
      loss_(model.cfg.sample_rate, cfg.mel_scales), params_(model.parameters()),
      adam_(params_, cfg.adam), rng_(seed) {}

TrainStepReport Trainer::step(const std::vector<std::vector<double>>& batch) {
    if (batch.empty()) throw std::invalid_argument("Trainer::step: empty batch");
    const size_t seg_len = batch.front().size();
    const int down = model_.cfg.downsampling();
    if (seg_len == 0 || seg_len % static_cast<size_t>(down) != 0)
        throw std::invalid_argument(
            "Trainer::step: segment length must be a positive multiple of the downsampling factor");
    for (const auto& seg : batch)
        if (seg.size() != seg_len) throw std::invalid_argument("Trainer::step: ragged batch");

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    zero_grads(params_);

    if (!seeded_) {
        std::vector<Tensor> latents;
        for (const auto& seg : batch) {
            Tensor x(1, static_cast<int>(seg_len));
            std::copy(seg.begin(), seg.end(), x.row(0));
            latents.push_back(model_.encoder.forward(x));
        }
        seed_codebooks(stack_, latents, rng_);
        seeded_ = true;
    }

    TrainStepReport report;
    report.mel_scales = loss_.scales();
    report.mel_per_scale.assign(loss_.scales().size(), 0.0);

    // Per-stage EMA assignment accumulators across the batch.
    const size_t n_stages = stack_.n_stages();
    std::vector<std::vector<int>> ema_indices(n_stages);
    std::vector<std::vector<Tensor>> ema_inputs(n_stages);

    std::vector<double> grad_wave;
    // Shapes inside this loop are consistent by construction, so a domain
    // error here (non-finite tensors, exp overflow in an activation) means
    // the optimizer pushed the parameters out of range.
    try {
        for (const auto& seg : batch) {
            Tensor x(1, static_cast<int>(seg_len));
            std::copy(seg.begin(), seg.end(), x.row(0));

            Encoder::Cache enc_cache;
            const Tensor z = model_.encoder.forward(x, &enc_cache);

            EncodeResult enc = stack_.mode == QuantizerMode::mbs ? mbs_rvq_encode(z, stack_)
                                                                 : vanilla_rvq_encode(z, stack_);

            Decoder::Cache dec_cache;
            const Tensor yhat = model_.decoder.forward(enc.quantized, &dec_cache);

            std::vector<double> pred(yhat.row(0), yhat.row(0) + yhat.cols);
            const MelLossReport mel = loss_.evaluate(pred, seg, &grad_wave);
            const double commit = commitment_loss(enc.trace, stack_.commit_weights);

            report.mel += mel.total * inv_batch;
            report.commitment += commit * inv_batch;
            for (size_t s = 0; s < mel.per_scale.size(); ++s)
                report.mel_per_scale[s] += mel.per_scale[s] * inv_batch;

            // Backward: mel gradient through the decoder, straight through the
            // quantizer, plus the commitment pull on the encoder output.
            Tensor dy(1, static_cast<int>(grad_wave.size()));
            for (size_t i = 0; i < grad_wave.size(); ++i) dy.at(0, static_cast<int>(i)) = grad_wave[i] * inv_batch;
            const Tensor dzq = model_.decoder.backward(dec_cache, dy);
            Tensor dz = ste_backward(dzq, z);
            const Tensor dcommit = commitment_backward(enc.trace, stack_);
            for (size_t i = 0; i < dz.v.size(); ++i)
                dz.v[i] += cfg_.lambda_commit * inv_batch * dcommit.v[i];
            model_.encoder.backward(enc_cache, dz);

            for (size_t k = 0; k < n_stages; ++k) {
                const Tensor& b = enc.trace.band_inputs[k];
                for (int t = 0; t < b.cols; ++t)
                    ema_indices[k].push_back(enc.tokens.index(t, static_cast<int>(k)));
                ema_inputs[k].push_back(b);
            }
        }
    } catch (const std::invalid_argument& e) {
        std::ostringstream msg;
        msg << "training aborted: " << e.what() << " at optimizer step "
            << adam_.steps_taken() + 1;
        throw NumericalAbort(msg.str());
    }

    report.total = report.mel + cfg_.lambda_commit * report.commitment;
    if (!std::isfinite(report.total)) {
        std::ostringstream msg;
        msg << "training aborted: non-finite loss (mel=" << report.mel
            << ", commitment=" << report.commitment << ") at optimizer step "
            << adam_.steps_taken() + 1;
        throw NumericalAbort(msg.str());
    }

    for (size_t k = 0; k < n_stages; ++k) {
        const Tensor points = columns_as_rows(ema_inputs[k]);
        ema_update(stack_.codebooks[k], ema_indices[k], points);
        revive_dead_codes(stack_.codebooks[k], points, rng_);
    }

    adam_.step(params_);
    return report;
}

} // namespace mbsc
