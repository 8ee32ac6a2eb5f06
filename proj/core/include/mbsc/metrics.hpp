#ifndef MBSC_METRICS_HPP
#define MBSC_METRICS_HPP

#include <string>
#include <vector>

#include "mbsc/audio.hpp"
#include "mbsc/band.hpp"
#include "mbsc/mel_loss.hpp"
#include "mbsc/quantizer.hpp"

namespace mbsc {

// Mean L1 distance between log magnitudes log(1e-5 + |X|) of the two
// signals' STFTs (window 1024, hop 256, one-sided bins). Inputs must have
// equal length and sample rate.
double stft_distance(const AudioBuffer& a, const AudioBuffer& b);

// Mean over scales i = 7..11 of the mean L1 distance between 64-bin log
// mel frames; the report variant carries the per-scale breakdown.
double mel_distance_multiscale(const AudioBuffer& a, const AudioBuffer& b);
MelLossReport mel_distance_report(const AudioBuffer& a, const AudioBuffer& b);

// 10 log10(||ref||^2 / ||ref - est||^2), capped at 300 dB for exact
// reconstruction. All-zero reference is an error.
double snr(const AudioBuffer& reference, const AudioBuffer& estimate);

inline constexpr double kSnrCapDb = 300.0;

struct TokenStatistics {
    std::vector<double> entropy_bits;            // per stage
    std::vector<double> perplexity;              // 2^entropy
    std::vector<std::vector<long>> usage;        // per stage, 2^bits counters
};

// Empirical per-stage statistics of the index histogram. Empty streams are
// an error.
TokenStatistics token_statistics(const TokenStream& tokens);

// Empirical entropy accounting per quantizer stage: measured token entropy
// H_k against the allocated rate R_k, band-restricted spectral distortion
// D_k between a signal and its reconstruction, user-supplied masking
// thresholds P_k and offsets Delta_k, and the resulting rate lower bound
// sum H_k - sum Delta_k.
struct PerceptualEntropyReport {
    std::vector<double> entropy_bits;    // H_k
    std::vector<double> rate_bits;       // R_k (bits per code)
    std::vector<double> distortion;      // D_k
    std::vector<double> threshold;       // P_k
    std::vector<double> masking_offset;  // Delta_k
    std::vector<bool> transparent;       // D_k <= P_k
    double total_entropy = 0.0;          // sum H_k
    double total_rate = 0.0;             // sum R_k
    double bound = 0.0;                  // sum H_k - sum Delta_k

    std::string to_text() const;
    std::string to_csv() const;
};

// Assembles the report. D_k is the L2 distance between STFT magnitudes
// (window 1024, hop 256) of x and xhat restricted to stage k's band mapped
// onto the audio axis (latent Hz scaled by sample_rate / latent_rate;
// residual stages cover the full spectrum). Thresholds default to +inf and
// offsets to 0 when empty; negative offsets are an error.
PerceptualEntropyReport perceptual_entropy_report(const AudioBuffer& x, const AudioBuffer& xhat,
                                                  const TokenStream& tokens, const BandPlan& plan,
                                                  std::vector<double> thresholds = {},
                                                  std::vector<double> offsets = {});

} // namespace mbsc

#endif
