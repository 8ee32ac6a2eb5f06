#include "mbsc/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mbsc {

std::vector<double> hann_window(int n) {
    if (n <= 0) throw std::invalid_argument("hann_window: length must be positive");
    std::vector<double> w(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
        w[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * k / n));
    return w;
}

int stft_frame_count(int len, int hop) {
    if (len <= 0 || hop <= 0) throw std::invalid_argument("stft_frame_count: bad arguments");
    return len / hop + 1;
}

ComplexFrames stft(const AudioBuffer& audio, int window, int hop) {
    if (window <= 0 || (window & (window - 1)) != 0)
        throw std::invalid_argument("stft: window must be a power of two");
    if (hop == 0) hop = window / 4;
    if (hop <= 0) throw std::invalid_argument("stft: hop must be positive");

    const long len = static_cast<long>(audio.samples.size());
    const int pad = window / 2;
    if (len < pad + 1)
        throw std::invalid_argument("stft: input too short to reflect-pad (need > window/2 samples)");

    ComplexFrames out;
    out.window = window;
    out.hop = hop;
    const std::vector<double> w = hann_window(window);
    const int n_frames = stft_frame_count(static_cast<int>(len), hop);
    out.frames.reserve(static_cast<size_t>(n_frames));

    cvec buf(static_cast<size_t>(window));
    for (int m = 0; m < n_frames; ++m) {
        const long start = static_cast<long>(m) * hop - pad;
        for (int k = 0; k < window; ++k) {
            const double s = audio.samples[reflect_index(start + k, len)];
            buf[k] = {s * w[k], 0.0};
        }
        out.frames.push_back(dft_complex(buf, false));
    }
    return out;
}

} // namespace mbsc
