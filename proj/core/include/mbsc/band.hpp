#ifndef MBSC_BAND_HPP
#define MBSC_BAND_HPP

#include <cstddef>
#include <vector>

#include "mbsc/tensor.hpp"

namespace mbsc {

// Frequency interval [f_min, f_max) in Hz on the latent temporal axis.
// `include_nyquist` decides ownership of the Nyquist bin when f_max reaches
// rate/2 (the interval is half-open everywhere else, so interior edges never
// double-count). A degenerate range with f_min == f_max == rate/2 selects
// exactly the Nyquist bin.
struct BandRange {
    double f_min = 0.0;
    double f_max = 0.0;
    unsigned scale_factor = 1;
    bool include_nyquist = true;
};

// Ordered band split of the latent spectrum plus trailing full-band stages.
// Band edges are stored on the two-sided axis [0, latent_rate]; see
// stage_band() for the conversion to the one-sided ranges that
// band_project consumes.
struct BandPlan {
    double latent_rate = 0.0;
    std::vector<BandRange> bands;
    unsigned residual_stages = 0;

    size_t n_stages() const { return bands.size() + residual_stages; }
    bool is_banded_stage(size_t k) const { return k < bands.size(); }
};

// Builds the band split from dyadic ratios. Ratios must be strictly
// descending powers of two (the default 4,2,1 gives band edges at 1/4,
// 1/2 and all of latent_rate on the two-sided axis). `residual_stages`
// full-band stages are appended after the banded ones.
BandPlan make_band_plan(double latent_rate, const std::vector<unsigned>& ratios,
                        unsigned residual_stages);

// One-sided projection range for stage k of a plan: banded stages get their
// stored two-sided edges halved (so ratios 4,2,1 on a 75 Hz latent give
// cutoffs 9.375 / 18.75 / 37.5 Hz), residual stages get the full range. The
// last banded stage owns the Nyquist bin.
BandRange stage_band(const BandPlan& plan, size_t k);

// Keeps only the DFT bins of each channel row whose frequency falls inside
// `band`, zeroing the rest symmetrically, and transforms back. Frequencies
// are one-sided: bin b of a length-T row sits at min(b, T-b) * rate / T.
// Requires 0 <= f_min <= f_max <= latent_rate/2 (equality of the edges is
// only meaningful at Nyquist) and finite z; throws std::invalid_argument
// otherwise.
Tensor band_project(const Tensor& z, const BandRange& band, double latent_rate);

// Fraction of squared spectral energy of z that band_project(z, band) keeps.
// Zero tensor reports 0. Used by the band-confinement harnesses.
double band_energy_fraction(const Tensor& z, const BandRange& band, double latent_rate);

} // namespace mbsc

#endif
