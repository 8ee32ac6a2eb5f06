#include "mbsc/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mbsc {

AudioBuffer synthetic_segment(Rng& rng, int sample_rate, int n_samples,
                              const SyntheticConfig& cfg) {
    if (sample_rate <= 0) throw std::invalid_argument("synthetic_segment: nonpositive sample rate");
    if (n_samples <= 0) throw std::invalid_argument("synthetic_segment: nonpositive length");
    if (cfg.min_tones < 1 || cfg.max_tones < cfg.min_tones)
        throw std::invalid_argument("synthetic_segment: bad tone range");
    if (!(cfg.freq_lo > 0.0) || !(cfg.freq_hi > cfg.freq_lo))
        throw std::invalid_argument("synthetic_segment: bad frequency range");

    const double two_pi = 2.0 * std::numbers::pi;
    const double f_hi = std::min(cfg.freq_hi, 0.45 * sample_rate);
    const double f_lo = std::min(cfg.freq_lo, f_hi / 2.0);

    int n_tones = cfg.min_tones + static_cast<int>(rng.index(
                                      static_cast<size_t>(cfg.max_tones - cfg.min_tones + 1)));

    struct Tone {
        double freq, phase, amp;
        bool am = false;
        double am_rate = 0, am_depth = 0, am_phase = 0;
    };
    std::vector<Tone> tones(static_cast<size_t>(n_tones));
    for (Tone& t : tones) {
        t.freq = std::exp(rng.uniform(std::log(f_lo), std::log(f_hi)));
        t.phase = rng.uniform(0.0, two_pi);
        t.amp = rng.uniform(0.3, 1.0) / n_tones;
        if (rng.uniform() < cfg.am_probability) {
            t.am = true;
            t.am_rate = rng.uniform(cfg.am_rate_lo, cfg.am_rate_hi);
            t.am_depth = rng.uniform(cfg.am_depth_lo, cfg.am_depth_hi);
            t.am_phase = rng.uniform(0.0, two_pi);
        }
    }

    AudioBuffer audio;
    audio.sample_rate = sample_rate;
    audio.samples.resize(static_cast<size_t>(n_samples));
    double peak = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        double ts = static_cast<double>(i) / sample_rate;
        double v = 0.0;
        for (const Tone& t : tones) {
            double env = 1.0;
            if (t.am)
                env = 1.0 - t.am_depth * 0.5 * (1.0 + std::cos(two_pi * t.am_rate * ts + t.am_phase));
            v += t.amp * env * std::sin(two_pi * t.freq * ts + t.phase);
        }
        v += cfg.noise_floor * rng.normal();
        audio.samples[static_cast<size_t>(i)] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0) {
        double scale = cfg.peak / peak;
        for (double& s : audio.samples) s *= scale;
    }
    return audio;
}

std::vector<AudioBuffer> synthetic_corpus(Rng& rng, int sample_rate, int n_samples, int count,
                                          const SyntheticConfig& cfg) {
    if (count <= 0) throw std::invalid_argument("synthetic_corpus: nonpositive count");
    std::vector<AudioBuffer> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(synthetic_segment(rng, sample_rate, n_samples, cfg));
    return out;
}

} // namespace mbsc
