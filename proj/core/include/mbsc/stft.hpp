#ifndef MBSC_STFT_HPP
#define MBSC_STFT_HPP

#include <cstddef>
#include <vector>

#include "mbsc/audio.hpp"
#include "mbsc/dft.hpp"

namespace mbsc {

// Short-time transform frames. Each frame holds all `window` two-sided
// DFT bins of one Hann-windowed, reflection-centered slice of the input.
struct ComplexFrames {
    int window = 0;
    int hop = 0;
    std::vector<cvec> frames;

    size_t n_frames() const { return frames.size(); }
};

// Periodic Hann window of length n: 0.5 * (1 - cos(2 pi k / n)).
std::vector<double> hann_window(int n);

// Number of frames produced for `len` input samples at the given hop,
// with frames centered by window/2 reflection padding on both sides:
// floor(len / hop) + 1.
int stft_frame_count(int len, int hop);

// Mirrors an out-of-range sample index back into [0, len) without
// repeating the edge sample (reflect padding). Valid as long as the
// overhang is at most len - 1.
inline int reflect_index(long i, long len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * (len - 1) - i;
    return static_cast<int>(i);
}

// Hann-windowed DFT frames of a mono buffer. `window` must be a power of
// two; hop defaults to window/4 when 0. The signal is reflection-padded by
// window/2 on each side so frames are centered; input shorter than
// window/2 + 1 samples cannot be padded and raises std::invalid_argument.
ComplexFrames stft(const AudioBuffer& audio, int window, int hop = 0);

} // namespace mbsc

#endif
