#include "mbsc/mel.hpp"

#include <cmath>
#include <stdexcept>

namespace mbsc {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(int n_mels, int fft_size, int sample_rate) {
    if (n_mels <= 0 || fft_size <= 0 || sample_rate <= 0)
        throw std::invalid_argument("make_mel_filterbank: bad arguments");

    const int n_bins = fft_size / 2 + 1;
    MelFilterbank bank;
    bank.n_mels = n_mels;
    bank.fft_size = fft_size;
    bank.sample_rate = sample_rate;
    bank.weights = Tensor(n_mels, n_bins);

    // n_mels + 2 corner points, evenly spaced in mel.
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    std::vector<double> hz(static_cast<size_t>(n_mels) + 2);
    for (int j = 0; j < n_mels + 2; ++j)
        hz[j] = mel_to_hz(mel_max * j / (n_mels + 1));

    const double bin_hz = static_cast<double>(sample_rate) / fft_size;
    for (int j = 0; j < n_mels; ++j) {
        const double lo = hz[j], mid = hz[j + 1], hi = hz[j + 2];
        bool any = false;
        for (int b = 0; b < n_bins; ++b) {
            const double f = b * bin_hz;
            const double up = (f - lo) / (mid - lo);
            const double down = (hi - f) / (hi - mid);
            const double w = std::max(0.0, std::min(up, down));
            if (w > 0.0) {
                bank.weights.at(j, b) = w;
                any = true;
            }
        }
        if (!any) {
            // Narrow low-frequency filter fell between bin centers.
            const int b = static_cast<int>(std::min<double>(n_bins - 1.0, std::round(mid / bin_hz)));
            bank.weights.at(j, b) = 1.0;
        }
    }
    return bank;
}

Tensor mel_spectrogram(const AudioBuffer& audio, int scale_index, const MelFilterbank& bank) {
    if (scale_index < 7 || scale_index > 11)
        throw std::invalid_argument("mel_spectrogram: scale index must be in [7, 11]");
    const int window = 1 << scale_index;
    if (bank.fft_size != window || bank.sample_rate != audio.sample_rate)
        throw std::invalid_argument("mel_spectrogram: filterbank does not match scale/rate");

    const ComplexFrames sp = stft(audio, window, window / 4);
    const int n_bins = window / 2 + 1;
    Tensor out(static_cast<int>(sp.n_frames()), bank.n_mels);
    for (size_t m = 0; m < sp.n_frames(); ++m) {
        const cvec& X = sp.frames[m];
        for (int j = 0; j < bank.n_mels; ++j) {
            double acc = 0.0;
            const double* wrow = bank.weights.row(j);
            for (int b = 0; b < n_bins; ++b) {
                if (wrow[b] != 0.0) acc += wrow[b] * std::norm(X[b]);
            }
            out.at(static_cast<int>(m), j) = std::log(kMelLogFloor + acc);
        }
    }
    return out;
}

Tensor mel_spectrogram(const AudioBuffer& audio, int scale_index) {
    if (scale_index < 7 || scale_index > 11)
        throw std::invalid_argument("mel_spectrogram: scale index must be in [7, 11]");
    const MelFilterbank bank = make_mel_filterbank(kMelBins, 1 << scale_index, audio.sample_rate);
    return mel_spectrogram(audio, scale_index, bank);
}

} // namespace mbsc
