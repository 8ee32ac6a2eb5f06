#ifndef MBSC_MEL_HPP
#define MBSC_MEL_HPP

#include "mbsc/audio.hpp"
#include "mbsc/stft.hpp"
#include "mbsc/tensor.hpp"

namespace mbsc {

// Triangular filters spaced evenly on mel(f) = 2595 log10(1 + f/700) over
// [0, sample_rate/2]. weights is n_mels x (fft_size/2 + 1), acting on the
// one-sided power spectrum. A filter too narrow to touch any bin center
// falls back to unit weight on the bin nearest its peak, so every row has
// at least one non-zero entry.
struct MelFilterbank {
    int n_mels = 0;
    int fft_size = 0;
    int sample_rate = 0;
    Tensor weights;
};

double hz_to_mel(double f);
double mel_to_hz(double m);

MelFilterbank make_mel_filterbank(int n_mels, int fft_size, int sample_rate);

// Log mel energies at dyadic scale i (window 2^i, hop 2^i/4), 64 mel bins.
// Output rows are frames, columns mel bins: log(1e-5 + filterbank * |X|^2).
// Requires i in [7, 11]; STFT errors propagate.
Tensor mel_spectrogram(const AudioBuffer& audio, int scale_index);

// The same spectrogram computed through a caller-supplied filterbank; used
// by the loss layer so the bank is built once.
Tensor mel_spectrogram(const AudioBuffer& audio, int scale_index, const MelFilterbank& bank);

inline constexpr double kMelLogFloor = 1e-5;
inline constexpr int kMelBins = 64;

} // namespace mbsc

#endif
