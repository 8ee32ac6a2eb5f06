#ifndef MBSC_TRAINER_HPP
#define MBSC_TRAINER_HPP

#include <stdexcept>
#include <vector>

#include "mbsc/mel_loss.hpp"
#include "mbsc/model.hpp"
#include "mbsc/quantizer.hpp"

namespace mbsc {

// Thrown when a training step produces a non-finite loss; carries the
// step's diagnostics in what().
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over a fixed parameter list. Moment tensors are indexed by list
// position, so every step must receive the same list the optimizer was
// built from.
class Adam {
  public:
    Adam(const ParamList& params, AdamConfig cfg = {});
    void step(const ParamList& params);
    long steps_taken() const { return t_; }

  private:
    AdamConfig cfg_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

struct TrainerConfig {
    double lambda_commit = 0.25;
    AdamConfig adam;
    std::vector<int> mel_scales{7, 8, 9, 10, 11};
};

struct TrainStepReport {
    double total = 0.0;       // mel + lambda * commitment, batch mean
    double mel = 0.0;         // multiscale mel term, batch mean
    double commitment = 0.0;  // commitment term, batch mean
    std::vector<int> mel_scales;
    std::vector<double> mel_per_scale; // batch mean per scale
};

// Seeds every codebook of the stack from the latents of one batch,
// stage by stage: stage k is k-means++ seeded on the inputs it would see
// given the stages already seeded, then committed so the next stage sees
// real residuals.
void seed_codebooks(QuantizerStack& stack, const std::vector<Tensor>& latents, Rng& rng);

// Single-writer training loop body: reconstruction through the quantizer
// with straight-through gradients, one Adam update per step, and one EMA
// codebook update per stage per step over the whole batch. Codebooks are
// seeded from the first batch.
class Trainer {
  public:
    Trainer(Model& model, QuantizerStack& stack, TrainerConfig cfg, uint64_t seed);

    // One optimizer step on a batch of equal-length segments whose length
    // must be a multiple of the model's downsampling factor. Throws
    // NumericalAbort when the loss goes non-finite.
    TrainStepReport step(const std::vector<std::vector<double>>& batch);

    const MultiScaleMelLoss& loss() const { return loss_; }

  private:
    Model& model_;
    QuantizerStack& stack_;
    TrainerConfig cfg_;
    MultiScaleMelLoss loss_;
    ParamList params_;
    Adam adam_;
    Rng rng_;
    bool seeded_ = false;
};

} // namespace mbsc

#endif
