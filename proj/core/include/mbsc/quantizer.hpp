#ifndef MBSC_QUANTIZER_HPP
#define MBSC_QUANTIZER_HPP

#include <cstdint>
#include <vector>

#include "mbsc/band.hpp"
#include "mbsc/codebook.hpp"
#include "mbsc/tensor.hpp"

namespace mbsc {

enum class QuantizerMode : uint8_t { mbs = 0, vanilla = 1 };

// Per-frame, per-stage code indices plus what is needed to interpret them.
struct TokenStream {
    double frame_rate = 0.0; // Hz
    int n_stages = 0;
    int bits = 0;
    int frames = 0;
    std::vector<uint16_t> indices; // frame-major: (t, k) at t * n_stages + k

    uint16_t index(int t, int k) const { return indices[static_cast<size_t>(t) * n_stages + k]; }
    uint16_t& index(int t, int k) { return indices[static_cast<size_t>(t) * n_stages + k]; }
};

// Multi-stage residual quantizer. In mbs mode, banded stages first isolate
// their frequency band of the running residual and quantize that; the full
// quantized vector is then subtracted from the residual. Stages beyond the
// banded ones (and every stage in vanilla mode) quantize the raw residual.
struct QuantizerStack {
    BandPlan plan;
    std::vector<Codebook> codebooks; // one per stage
    std::vector<double> commit_weights;
    QuantizerMode mode = QuantizerMode::mbs;

    size_t n_stages() const { return codebooks.size(); }
    int dim() const { return codebooks.empty() ? 0 : codebooks.front().dim(); }
    int bits() const { return codebooks.empty() ? 0 : codebooks.front().bits(); }
};

// Zero-initialized stack with one 2^bits-entry codebook per plan stage and
// unit commitment weights.
QuantizerStack make_quantizer_stack(const BandPlan& plan, int dim, int bits,
                                    QuantizerMode mode = QuantizerMode::mbs,
                                    double decay = 0.99, double smoothing_eps = 1e-5);

// Per-stage snapshots of one encode pass: the tensor each stage saw
// (band-projected residual for banded mbs stages, raw residual otherwise),
// the quantized tensor it produced, and the residual norm after it.
struct EncodeTrace {
    std::vector<Tensor> band_inputs; // z_e per stage
    std::vector<Tensor> quantized;   // z_q per stage
    std::vector<double> residual_norms;
};

struct EncodeResult {
    TokenStream tokens;
    Tensor quantized; // sum over stages
    EncodeTrace trace;
};

// Banded residual encode (requires q.mode == mbs). Every time-frame column
// of each stage input is mapped to its nearest code.
EncodeResult mbs_rvq_encode(const Tensor& z, QuantizerStack& q);

// Plain residual encode with no band projection (requires q.mode == vanilla).
EncodeResult vanilla_rvq_encode(const Tensor& z, QuantizerStack& q);

// Sum of code vectors selected by the tokens; bit-for-bit equal to the
// encoder's quantized output for its own token stream.
Tensor mbs_rvq_decode(const TokenStream& tokens, const QuantizerStack& q);

// Sum restricted to the given 1-based stage set (duplicates rejected).
// Throws on an empty set or out-of-range stage.
Tensor subset_decode(const TokenStream& tokens, const QuantizerStack& q,
                     const std::vector<int>& stages);

// Sum_i weights[i] * ||z_e_i - z_q_i||^2 (squared Frobenius norm).
double commitment_loss(const EncodeTrace& trace, const std::vector<double>& weights);

// Gradient of the commitment loss with respect to the encoder output z,
// holding the selected code vectors fixed: Sum_i 2 w_i P_i (z_e_i - z_q_i)
// with P_i the stage's band projection (identity for raw-residual stages).
Tensor commitment_backward(const EncodeTrace& trace, const QuantizerStack& q);

// Re-runs the encode recursion with code choices pinned to `tokens`
// instead of nearest-code search. Makes the commitment loss a smooth
// function of z for derivative checks.
EncodeTrace pinned_trace(const Tensor& z, const QuantizerStack& q, const TokenStream& tokens);

// Straight-through estimator: the quantizer boundary passes gradients
// through unchanged (code vectors learn by EMA only). `like` is the
// encoder-output tensor the gradient must conform to.
Tensor ste_backward(const Tensor& upstream, const Tensor& like);

} // namespace mbsc

#endif
