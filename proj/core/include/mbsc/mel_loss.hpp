#ifndef MBSC_MEL_LOSS_HPP
#define MBSC_MEL_LOSS_HPP

#include <vector>

#include "mbsc/mel.hpp"

namespace mbsc {

struct MelLossReport {
    double total = 0.0;              // mean over scales
    std::vector<int> scales;         // dyadic exponents i (window 2^i)
    std::vector<double> per_scale;   // mean L1 of log-mel frames per scale
};

// L1 distance between 64-bin log mel spectrograms of two equal-length
// signals, averaged over frames and bins per scale and then over scales,
// with an analytic gradient with respect to the first signal. Filterbanks
// are built once per scale at construction.
class MultiScaleMelLoss {
  public:
    MultiScaleMelLoss(int sample_rate, std::vector<int> scales = {7, 8, 9, 10, 11});

    // Loss between pred and target; when grad is non-null it receives
    // dLoss/dpred (resized to pred's length). Signals must have equal
    // length, long enough for the largest window's reflection padding.
    MelLossReport evaluate(const std::vector<double>& pred, const std::vector<double>& target,
                           std::vector<double>* grad = nullptr) const;

    const std::vector<int>& scales() const { return scales_; }

  private:
    struct ScaleContext {
        int scale_index;
        int window;
        int hop;
        MelFilterbank bank;
        std::vector<std::pair<int, int>> row_range; // [lo, hi) non-zero bin span per mel row
        std::vector<double> win;
    };
    int sample_rate_;
    std::vector<int> scales_;
    std::vector<ScaleContext> contexts_;
};

} // namespace mbsc

#endif
