#include "mbsc/band.hpp"

#include <cmath>
#include <stdexcept>

#include "mbsc/dft.hpp"

namespace mbsc {

namespace {

bool is_pow2(unsigned n) { return n != 0 && (n & (n - 1)) == 0; }

void check_band(const BandRange& band, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("band_project: latent_rate must be positive");
    if (!std::isfinite(band.f_min) || !std::isfinite(band.f_max))
        throw std::invalid_argument("band_project: band edges must be finite");
    if (band.f_min < 0.0 || band.f_min > band.f_max || band.f_max > rate / 2)
        throw std::invalid_argument("band_project: band outside [0, latent_rate/2]");
}

// Bin-retention mask for one row length. Bin b of a length-T row sits at
// one-sided frequency min(b, T-b) * rate / T; membership is half-open
// [f_min, f_max) except for the Nyquist bin, which is owned by bands that
// reach rate/2 and ask for it.
std::vector<char> bin_mask(int T, const BandRange& band, double rate) {
    std::vector<char> keep(static_cast<size_t>(T), 0);
    const double nyquist = rate / 2;
    for (int b = 0; b < T; ++b) {
        if (T % 2 == 0 && b == T / 2) {
            keep[b] = band.include_nyquist && band.f_max == nyquist;
            continue;
        }
        const double f = static_cast<double>(std::min(b, T - b)) * rate / T;
        keep[b] = f >= band.f_min && f < band.f_max;
    }
    return keep;
}

} // namespace

BandPlan make_band_plan(double latent_rate, const std::vector<unsigned>& ratios,
                        unsigned residual_stages) {
    if (!(latent_rate > 0.0))
        throw std::invalid_argument("make_band_plan: latent_rate must be positive");
    if (ratios.empty()) throw std::invalid_argument("make_band_plan: no band ratios given");
    for (size_t i = 0; i < ratios.size(); ++i) {
        if (!is_pow2(ratios[i]))
            throw std::invalid_argument("make_band_plan: ratios must be powers of two");
        if (i > 0 && ratios[i] >= ratios[i - 1])
            throw std::invalid_argument("make_band_plan: ratios must be strictly descending");
    }

    BandPlan plan;
    plan.latent_rate = latent_rate;
    plan.residual_stages = residual_stages;
    double lo = 0.0;
    for (size_t i = 0; i < ratios.size(); ++i) {
        BandRange band;
        band.f_min = lo;
        band.f_max = latent_rate / ratios[i];
        band.scale_factor = ratios[i];
        band.include_nyquist = (i + 1 == ratios.size());
        plan.bands.push_back(band);
        lo = band.f_max;
    }
    return plan;
}

BandRange stage_band(const BandPlan& plan, size_t k) {
    if (k >= plan.n_stages()) throw std::invalid_argument("stage_band: stage out of range");
    if (plan.is_banded_stage(k)) {
        const BandRange& stored = plan.bands[k];
        // Stored edges live on the two-sided axis [0, latent_rate]; the
        // projection wants one-sided Hz, so halve.
        return BandRange{stored.f_min / 2, stored.f_max / 2, stored.scale_factor,
                         stored.include_nyquist};
    }
    return BandRange{0.0, plan.latent_rate / 2, 1, true};
}

Tensor band_project(const Tensor& z, const BandRange& band, double latent_rate) {
    check_band(band, latent_rate);
    if (!z.finite()) throw std::invalid_argument("band_project: input has NaN/Inf");
    Tensor out(z.rows, z.cols);
    if (z.cols == 0 || z.rows == 0) return out;

    const std::vector<char> keep = bin_mask(z.cols, band, latent_rate);
    std::vector<double> row(z.cols);
    for (int r = 0; r < z.rows; ++r) {
        std::copy(z.row(r), z.row(r) + z.cols, row.begin());
        cvec X = dft_forward(row);
        for (int b = 0; b < z.cols; ++b)
            if (!keep[b]) X[b] = {0.0, 0.0};
        const std::vector<double> back = dft_inverse(X);
        std::copy(back.begin(), back.end(), out.row(r));
    }
    return out;
}

double band_energy_fraction(const Tensor& z, const BandRange& band, double latent_rate) {
    check_band(band, latent_rate);
    if (!z.finite()) throw std::invalid_argument("band_energy_fraction: input has NaN/Inf");
    if (z.cols == 0 || z.rows == 0) return 0.0;

    const std::vector<char> keep = bin_mask(z.cols, band, latent_rate);
    std::vector<double> row(z.cols);
    double total = 0.0, kept = 0.0;
    for (int r = 0; r < z.rows; ++r) {
        std::copy(z.row(r), z.row(r) + z.cols, row.begin());
        const cvec X = dft_forward(row);
        for (int b = 0; b < z.cols; ++b) {
            const double e = std::norm(X[b]);
            total += e;
            if (keep[b]) kept += e;
        }
    }
    return total == 0.0 ? 0.0 : kept / total;
}

} // namespace mbsc
