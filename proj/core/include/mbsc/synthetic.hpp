#ifndef MBSC_SYNTHETIC_HPP
#define MBSC_SYNTHETIC_HPP

#include <vector>

#include "mbsc/audio.hpp"
#include "mbsc/rng.hpp"

namespace mbsc {

// Test-signal recipe: a handful of sinusoids with log-uniform frequencies,
// some of them amplitude-modulated, over a low noise floor, peak-normalized.
struct SyntheticConfig {
    int min_tones = 1;
    int max_tones = 5;
    double freq_lo = 80.0;   // Hz
    double freq_hi = 8000.0; // Hz, additionally capped at 0.45 * sample rate
    double am_probability = 0.5;
    double am_rate_lo = 0.5; // Hz
    double am_rate_hi = 8.0;
    double am_depth_lo = 0.2;
    double am_depth_hi = 0.9;
    double noise_floor = 1e-3;
    double peak = 0.5;
};

// One segment drawn from the recipe. Same rng state, same samples.
AudioBuffer synthetic_segment(Rng& rng, int sample_rate, int n_samples,
                              const SyntheticConfig& cfg = {});

// `count` independent segments from one generator.
std::vector<AudioBuffer> synthetic_corpus(Rng& rng, int sample_rate, int n_samples, int count,
                                          const SyntheticConfig& cfg = {});

} // namespace mbsc

#endif
