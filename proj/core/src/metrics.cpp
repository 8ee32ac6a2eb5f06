#include "mbsc/metrics.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mbsc/dft.hpp"
#include "mbsc/stft.hpp"

namespace mbsc {

namespace {

constexpr int kSpectralWindow = 1024;
constexpr int kSpectralHop = 256;
constexpr double kLogFloor = 1e-5;

void check_pair(const AudioBuffer& a, const AudioBuffer& b) {
    if (a.samples.empty() || b.samples.empty())
        throw std::invalid_argument("metrics: empty signal");
    if (a.samples.size() != b.samples.size())
        throw std::invalid_argument("metrics: signals differ in length");
    if (a.sample_rate != b.sample_rate)
        throw std::invalid_argument("metrics: signals differ in sample rate");
}

// One-sided magnitudes per frame, window 1024 / hop 256.
std::vector<std::vector<double>> spectral_frames(const AudioBuffer& x) {
    ComplexFrames f = stft(x, kSpectralWindow, kSpectralHop);
    std::vector<std::vector<double>> mags(f.frames.size());
    for (std::size_t m = 0; m < f.frames.size(); ++m) {
        const cvec& spec = f.frames[m];
        std::vector<double>& row = mags[m];
        row.resize(static_cast<std::size_t>(kSpectralWindow / 2 + 1));
        for (std::size_t b = 0; b < row.size(); ++b) row[b] = std::abs(spec[b]);
    }
    return mags;
}

} // namespace

double stft_distance(const AudioBuffer& a, const AudioBuffer& b) {
    check_pair(a, b);
    std::vector<std::vector<double>> ma = spectral_frames(a);
    std::vector<std::vector<double>> mb = spectral_frames(b);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t m = 0; m < ma.size(); ++m) {
        for (std::size_t k = 0; k < ma[m].size(); ++k) {
            acc += std::abs(std::log(kLogFloor + ma[m][k]) - std::log(kLogFloor + mb[m][k]));
            ++n;
        }
    }
    return acc / static_cast<double>(n);
}

double mel_distance_multiscale(const AudioBuffer& a, const AudioBuffer& b) {
    return mel_distance_report(a, b).total;
}

MelLossReport mel_distance_report(const AudioBuffer& a, const AudioBuffer& b) {
    check_pair(a, b);
    MultiScaleMelLoss loss(a.sample_rate);
    return loss.evaluate(a.samples, b.samples, nullptr);
}

double snr(const AudioBuffer& reference, const AudioBuffer& estimate) {
    check_pair(reference, estimate);
    double sig = 0.0, err = 0.0;
    for (std::size_t i = 0; i < reference.samples.size(); ++i) {
        double r = reference.samples[i];
        double d = r - estimate.samples[i];
        sig += r * r;
        err += d * d;
    }
    if (sig == 0.0) throw std::invalid_argument("snr: all-zero reference");
    if (err == 0.0) return kSnrCapDb;
    double db = 10.0 * std::log10(sig / err);
    return std::min(db, kSnrCapDb);
}

TokenStatistics token_statistics(const TokenStream& tokens) {
    if (tokens.frames == 0 || tokens.n_stages == 0)
        throw std::invalid_argument("token_statistics: empty token stream");
    const int entries = 1 << tokens.bits;
    TokenStatistics st;
    st.entropy_bits.resize(static_cast<std::size_t>(tokens.n_stages));
    st.perplexity.resize(static_cast<std::size_t>(tokens.n_stages));
    st.usage.assign(static_cast<std::size_t>(tokens.n_stages),
                    std::vector<long>(static_cast<std::size_t>(entries), 0));
    for (int k = 0; k < tokens.n_stages; ++k) {
        std::vector<long>& hist = st.usage[static_cast<std::size_t>(k)];
        for (int t = 0; t < tokens.frames; ++t) {
            int idx = tokens.index(t, k);
            if (idx >= entries)
                throw std::invalid_argument("token_statistics: index out of range for bit width");
            ++hist[idx];
        }
        double h = 0.0;
        for (long c : hist) {
            if (c == 0) continue;
            double p = static_cast<double>(c) / static_cast<double>(tokens.frames);
            h -= p * std::log2(p);
        }
        st.entropy_bits[static_cast<std::size_t>(k)] = h;
        st.perplexity[static_cast<std::size_t>(k)] = std::exp2(h);
    }
    return st;
}

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

std::string PerceptualEntropyReport::to_text() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < entropy_bits.size(); ++k) {
        os << "stage " << (k + 1) << ": H=" << fmt(entropy_bits[k]) << " bits"
           << " R=" << fmt(rate_bits[k]) << " bits"
           << " D=" << fmt(distortion[k]) << " P=" << fmt(threshold[k])
           << " delta=" << fmt(masking_offset[k])
           << " transparent=" << (transparent[k] ? "yes" : "no") << "\n";
    }
    os << "total entropy " << fmt(total_entropy) << " bits/frame, total rate "
       << fmt(total_rate) << " bits/frame\n";
    os << "perceptual lower bound " << fmt(bound) << " bits/frame\n";
    return os.str();
}

std::string PerceptualEntropyReport::to_csv() const {
    std::ostringstream os;
    os << "stage,entropy_bits,rate_bits,distortion,threshold,masking_offset,transparent\n";
    for (std::size_t k = 0; k < entropy_bits.size(); ++k) {
        os << (k + 1) << ',' << fmt(entropy_bits[k]) << ',' << fmt(rate_bits[k]) << ','
           << fmt(distortion[k]) << ',' << fmt(threshold[k]) << ',' << fmt(masking_offset[k])
           << ',' << (transparent[k] ? 1 : 0) << "\n";
    }
    return os.str();
}

PerceptualEntropyReport perceptual_entropy_report(const AudioBuffer& x, const AudioBuffer& xhat,
                                                  const TokenStream& tokens, const BandPlan& plan,
                                                  std::vector<double> thresholds,
                                                  std::vector<double> offsets) {
    check_pair(x, xhat);
    const int stages = plan.n_stages();
    if (tokens.n_stages != stages)
        throw std::invalid_argument("perceptual_entropy_report: token stream and band plan disagree on stage count");
    if (thresholds.empty())
        thresholds.assign(static_cast<std::size_t>(stages), std::numeric_limits<double>::infinity());
    if (offsets.empty()) offsets.assign(static_cast<std::size_t>(stages), 0.0);
    if (thresholds.size() != static_cast<std::size_t>(stages) ||
        offsets.size() != static_cast<std::size_t>(stages))
        throw std::invalid_argument("perceptual_entropy_report: threshold/offset count mismatch");
    for (double d : offsets)
        if (!(d >= 0.0)) throw std::invalid_argument("perceptual_entropy_report: negative masking offset");

    TokenStatistics st = token_statistics(tokens);

    std::vector<std::vector<double>> ma = spectral_frames(x);
    std::vector<std::vector<double>> mb = spectral_frames(xhat);
    const double sr = static_cast<double>(x.sample_rate);
    const double audio_nyquist = sr / 2.0;
    const double scale = sr / plan.latent_rate; // latent Hz -> audio Hz

    PerceptualEntropyReport rep;
    rep.entropy_bits = st.entropy_bits;
    rep.threshold = std::move(thresholds);
    rep.masking_offset = std::move(offsets);
    rep.rate_bits.assign(static_cast<std::size_t>(stages), static_cast<double>(tokens.bits));
    rep.distortion.resize(static_cast<std::size_t>(stages));
    rep.transparent.resize(static_cast<std::size_t>(stages));

    for (int k = 0; k < stages; ++k) {
        BandRange band = stage_band(plan, k);
        double f_lo = band.f_min * scale;
        double f_hi = std::min(band.f_max * scale, audio_nyquist);
        double acc = 0.0;
        for (std::size_t m = 0; m < ma.size(); ++m) {
            for (std::size_t b = 0; b < ma[m].size(); ++b) {
                double f = static_cast<double>(b) * sr / kSpectralWindow;
                bool keep = f >= f_lo && f < f_hi;
                if (!keep && band.include_nyquist && f_hi == audio_nyquist && f == audio_nyquist)
                    keep = true;
                if (!keep) continue;
                double d = ma[m][b] - mb[m][b];
                acc += d * d;
            }
        }
        std::size_t kk = static_cast<std::size_t>(k);
        rep.distortion[kk] = std::sqrt(acc);
        rep.transparent[kk] = rep.distortion[kk] <= rep.threshold[kk];
        rep.total_entropy += rep.entropy_bits[kk];
        rep.total_rate += rep.rate_bits[kk];
        rep.bound += rep.entropy_bits[kk] - rep.masking_offset[kk];
    }
    return rep;
}

} // namespace mbsc
