#include "mbsc/quantizer.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace mbsc {

namespace {

void check_stack(const QuantizerStack& q) {
    if (q.codebooks.empty()) throw std::invalid_argument("quantizer: no codebooks");
    if (q.codebooks.size() != q.plan.n_stages())
        throw std::invalid_argument("quantizer: codebook count does not match plan stages");
    if (q.commit_weights.size() != q.codebooks.size())
        throw std::invalid_argument("quantizer: commit weight count does not match stages");
    const int d = q.codebooks.front().dim();
    const int bits = q.codebooks.front().bits();
    for (const Codebook& cb : q.codebooks) {
        if (cb.dim() != d) throw std::invalid_argument("quantizer: codebook dimensions differ");
        if (cb.bits() != bits) throw std::invalid_argument("quantizer: codebook sizes differ");
    }
}

void check_tokens(const TokenStream& tokens, const QuantizerStack& q) {
    if (tokens.n_stages != static_cast<int>(q.n_stages()))
        throw std::invalid_argument("quantizer: token stage count does not match stack");
    if (tokens.indices.size() != static_cast<size_t>(tokens.frames) * tokens.n_stages)
        throw std::invalid_argument("quantizer: token matrix size mismatch");
    const int K = q.codebooks.front().entries();
    for (uint16_t i : tokens.indices)
        if (static_cast<int>(i) >= K) throw std::invalid_argument("quantizer: token index out of range");
}

// Writes codebook row `idx` into column t of out.
void add_code_column(Tensor& out, const Codebook& cb, int idx, int t, double sign = 1.0) {
    const double* v = cb.vectors.row(idx);
    for (int r = 0; r < out.rows; ++r) out.at(r, t) += sign * v[r];
}

EncodeResult rvq_encode(const Tensor& z, QuantizerStack& q, bool banded) {
    check_stack(q);
    if (z.rows != q.dim())
        throw std::invalid_argument("quantizer: latent dimension does not match codebooks");
    if (!z.finite()) throw std::invalid_argument("quantizer: latent has NaN/Inf");

    const int T = z.cols;
    const size_t n = q.n_stages();

    EncodeResult res;
    res.tokens.frame_rate = q.plan.latent_rate;
    res.tokens.n_stages = static_cast<int>(n);
    res.tokens.bits = q.bits();
    res.tokens.frames = T;
    res.tokens.indices.assign(static_cast<size_t>(T) * n, 0);
    res.quantized = Tensor(z.rows, T);

    Tensor r = z;
    std::vector<double> col(static_cast<size_t>(z.rows));
    for (size_t k = 0; k < n; ++k) {
        Tensor b = (banded && q.plan.is_banded_stage(k))
                       ? band_project(r, stage_band(q.plan, k), q.plan.latent_rate)
                       : r;
        Tensor qk(z.rows, T);
        const Codebook& cb = q.codebooks[k];
        for (int t = 0; t < T; ++t) {
            for (int row = 0; row < z.rows; ++row) col[row] = b.at(row, t);
            const int idx = nearest_code(cb, col.data(), z.rows).first;
            res.tokens.index(t, static_cast<int>(k)) = static_cast<uint16_t>(idx);
            add_code_column(qk, cb, idx, t);
        }
        for (size_t i = 0; i < r.v.size(); ++i) r.v[i] -= qk.v[i];
        add_inplace(res.quantized, qk);
        res.trace.band_inputs.push_back(std::move(b));
        res.trace.quantized.push_back(std::move(qk));
        res.trace.residual_norms.push_back(std::sqrt(squared_norm(r)));
    }
    return res;
}

} // namespace

QuantizerStack make_quantizer_stack(const BandPlan& plan, int dim, int bits, QuantizerMode mode,
                                    double decay, double smoothing_eps) {
    if (dim <= 0) throw std::invalid_argument("make_quantizer_stack: bad dimension");
    if (bits < 1 || bits > 16) throw std::invalid_argument("make_quantizer_stack: bits must be in [1,16]");
    QuantizerStack q;
    q.plan = plan;
    q.mode = mode;
    const Tensor zeros(1 << bits, dim);
    for (size_t k = 0; k < plan.n_stages(); ++k)
        q.codebooks.push_back(make_codebook(zeros, decay, smoothing_eps));
    q.commit_weights.assign(plan.n_stages(), 1.0);
    check_stack(q);
    return q;
}

EncodeResult mbs_rvq_encode(const Tensor& z, QuantizerStack& q) {
    if (q.mode != QuantizerMode::mbs)
        throw std::invalid_argument("mbs_rvq_encode: stack is not in mbs mode");
    return rvq_encode(z, q, true);
}

EncodeResult vanilla_rvq_encode(const Tensor& z, QuantizerStack& q) {
    if (q.mode != QuantizerMode::vanilla)
        throw std::invalid_argument("vanilla_rvq_encode: stack is not in vanilla mode");
    return rvq_encode(z, q, false);
}

Tensor mbs_rvq_decode(const TokenStream& tokens, const QuantizerStack& q) {
    check_stack(q);
    check_tokens(tokens, q);
    Tensor out(q.dim(), tokens.frames);
    for (int t = 0; t < tokens.frames; ++t)
        for (int k = 0; k < tokens.n_stages; ++k)
            add_code_column(out, q.codebooks[k], tokens.index(t, k), t);
    return out;
}

Tensor subset_decode(const TokenStream& tokens, const QuantizerStack& q,
                     const std::vector<int>& stages) {
    check_stack(q);
    check_tokens(tokens, q);
    if (stages.empty()) throw std::invalid_argument("subset_decode: empty stage set");
    std::set<int> seen;
    for (int s : stages) {
        if (s < 1 || s > tokens.n_stages)
            throw std::invalid_argument("subset_decode: stage out of range");
        if (!seen.insert(s).second)
            throw std::invalid_argument("subset_decode: duplicate stage");
    }
    Tensor out(q.dim(), tokens.frames);
    for (int t = 0; t < tokens.frames; ++t)
        for (int s : seen) add_code_column(out, q.codebooks[s - 1], tokens.index(t, s - 1), t);
    return out;
}

double commitment_loss(const EncodeTrace& trace, const std::vector<double>& weights) {
    if (weights.size() != trace.band_inputs.size())
        throw std::invalid_argument("commitment_loss: weight count does not match trace");
    double total = 0.0;
    for (size_t k = 0; k < weights.size(); ++k)
        total += weights[k] * squared_norm(trace.band_inputs[k] - trace.quantized[k]);
    return total;
}

Tensor commitment_backward(const EncodeTrace& trace, const QuantizerStack& q) {
    check_stack(q);
    if (trace.band_inputs.size() != q.n_stages())
        throw std::invalid_argument("commitment_backward: trace does not match stack");
    Tensor dz(trace.band_inputs.front().rows, trace.band_inputs.front().cols);
    for (size_t k = 0; k < q.n_stages(); ++k) {
        Tensor diff = trace.band_inputs[k] - trace.quantized[k];
        if (q.mode == QuantizerMode::mbs && q.plan.is_banded_stage(k))
            diff = band_project(diff, stage_band(q.plan, k), q.plan.latent_rate);
        const double w = 2.0 * q.commit_weights[k];
        for (size_t i = 0; i < dz.v.size(); ++i) dz.v[i] += w * diff.v[i];
    }
    return dz;
}

EncodeTrace pinned_trace(const Tensor& z, const QuantizerStack& q, const TokenStream& tokens) {
    check_stack(q);
    check_tokens(tokens, q);
    if (z.rows != q.dim() || z.cols != tokens.frames)
        throw std::invalid_argument("pinned_trace: latent shape does not match tokens");

    EncodeTrace trace;
    Tensor r = z;
    for (size_t k = 0; k < q.n_stages(); ++k) {
        Tensor b = (q.mode == QuantizerMode::mbs && q.plan.is_banded_stage(k))
                       ? band_project(r, stage_band(q.plan, k), q.plan.latent_rate)
                       : r;
        Tensor qk(z.rows, z.cols);
        for (int t = 0; t < tokens.frames; ++t)
            add_code_column(qk, q.codebooks[k], tokens.index(t, static_cast<int>(k)), t);
        for (size_t i = 0; i < r.v.size(); ++i) r.v[i] -= qk.v[i];
        trace.band_inputs.push_back(std::move(b));
        trace.quantized.push_back(std::move(qk));
        trace.residual_norms.push_back(std::sqrt(squared_norm(r)));
    }
    return trace;
}

Tensor ste_backward(const Tensor& upstream, const Tensor& like) {
    if (!upstream.same_shape(like))
        throw std::invalid_argument("ste_backward: gradient shape does not match encoder output");
    return upstream;
}

} // namespace mbsc
