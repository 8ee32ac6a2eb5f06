#include "mbsc/mel_loss.hpp"

#include <cmath>
#include <stdexcept>

#include "mbsc/stft.hpp"

namespace mbsc {

MultiScaleMelLoss::MultiScaleMelLoss(int sample_rate, std::vector<int> scales)
    : sample_rate_(sample_rate), scales_(std::move(scales)) {
    if (scales_.empty()) throw std::invalid_argument("MultiScaleMelLoss: no scales");
    for (int i : scales_) {
        if (i < 7 || i > 11)
            throw std::invalid_argument("MultiScaleMelLoss: scale index must be in [7, 11]");
        ScaleContext ctx;
        ctx.scale_index = i;
        ctx.window = 1 << i;
        ctx.hop = ctx.window / 4;
        ctx.bank = make_mel_filterbank(kMelBins, ctx.window, sample_rate);
        ctx.win = hann_window(ctx.window);
        const int n_bins = ctx.window / 2 + 1;
        for (int j = 0; j < ctx.bank.n_mels; ++j) {
            int lo = n_bins, hi = 0;
            const double* row = ctx.bank.weights.row(j);
            for (int b = 0; b < n_bins; ++b) {
                if (row[b] != 0.0) {
                    lo = std::min(lo, b);
                    hi = std::max(hi, b + 1);
                }
            }
            ctx.row_range.emplace_back(lo, hi);
        }
        contexts_.push_back(std::move(ctx));
    }
}

namespace {

// One-sided power spectrum and retained two-sided spectrum of one
// windowed frame starting at `start` in padded coordinates.
cvec frame_spectrum(const std::vector<double>& x, long start, const std::vector<double>& win) {
    const long len = static_cast<long>(x.size());
    cvec buf(win.size());
    for (size_t n = 0; n < win.size(); ++n)
        buf[n] = {x[reflect_index(start + static_cast<long>(n), len)] * win[n], 0.0};
    return dft_complex(buf, false);
}

} // namespace

MelLossReport MultiScaleMelLoss::evaluate(const std::vector<double>& pred,
                                          const std::vector<double>& target,
                                          std::vector<double>* grad) const {
    if (pred.size() != target.size())
        throw std::invalid_argument("MultiScaleMelLoss: length mismatch");
    if (pred.empty()) throw std::invalid_argument("MultiScaleMelLoss: empty input");
    const long len = static_cast<long>(pred.size());

    if (grad) grad->assign(pred.size(), 0.0);

    MelLossReport report;
    report.scales = scales_;
    for (const ScaleContext& ctx : contexts_) {
        const int N = ctx.window;
        const int pad = N / 2;
        if (len < pad + 1)
            throw std::invalid_argument("MultiScaleMelLoss: input too short for largest window");
        const int n_frames = stft_frame_count(static_cast<int>(len), ctx.hop);
        const int n_bins = N / 2 + 1;
        const int J = ctx.bank.n_mels;

        double scale_loss = 0.0;
        const double norm = 1.0 / (static_cast<double>(n_frames) * J);
        std::vector<double> mel_p(J), mel_t(J), d_mel(J), d_pow(n_bins);
        cvec G(static_cast<size_t>(N));

        for (int m = 0; m < n_frames; ++m) {
            const long start = static_cast<long>(m) * ctx.hop - pad;
            const cvec Xp = frame_spectrum(pred, start, ctx.win);
            const cvec Xt = frame_spectrum(target, start, ctx.win);

            for (int j = 0; j < J; ++j) {
                const auto [lo, hi] = ctx.row_range[j];
                const double* wrow = ctx.bank.weights.row(j);
                double ap = 0.0, at = 0.0;
                for (int b = lo; b < hi; ++b) {
                    ap += wrow[b] * std::norm(Xp[b]);
                    at += wrow[b] * std::norm(Xt[b]);
                }
                mel_p[j] = ap;
                mel_t[j] = at;
                const double diff = std::log(kMelLogFloor + ap) - std::log(kMelLogFloor + at);
                scale_loss += std::abs(diff);
                d_mel[j] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            }

            if (!grad) continue;

            // Chain back through log, filterbank, power, DFT and window.
            std::fill(d_pow.begin(), d_pow.end(), 0.0);
            const double frame_norm = norm / static_cast<double>(scales_.size());
            for (int j = 0; j < J; ++j) {
                const double dm = d_mel[j] * frame_norm / (kMelLogFloor + mel_p[j]);
                if (dm == 0.0) continue;
                const auto [lo, hi] = ctx.row_range[j];
                const double* wrow = ctx.bank.weights.row(j);
                for (int b = lo; b < hi; ++b) d_pow[b] += dm * wrow[b];
            }

            // dP[b]/dxw has the inverse-transform structure with the DC and
            // Nyquist bins counted twice (they have no mirror partner).
            G[0] = 2.0 * d_pow[0] * Xp[0];
            G[N / 2] = 2.0 * d_pow[N / 2] * Xp[N / 2];
            for (int b = 1; b < N / 2; ++b) {
                G[b] = d_pow[b] * Xp[b];
                G[N - b] = std::conj(G[b]);
            }
            const cvec dxw = dft_complex(G, true);
            for (int n = 0; n < N; ++n) {
                const double g = static_cast<double>(N) * dxw[n].real() * ctx.win[n];
                (*grad)[reflect_index(start + n, len)] += g;
            }
        }
        report.per_scale.push_back(scale_loss * norm);
    }

    for (double v : report.per_scale) report.total += v;
    report.total /= static_cast<double>(report.per_scale.size());
    return report;
}

} // namespace mbsc
