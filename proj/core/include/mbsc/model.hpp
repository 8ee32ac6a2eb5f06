#ifndef MBSC_MODEL_HPP
#define MBSC_MODEL_HPP

#include <string>
#include <vector>

#include "mbsc/audio.hpp"
#include "mbsc/layers.hpp"

namespace mbsc {

// Architecture hyperparameters. Defaults are the desk-scale configuration
// every test runs; strides control the total downsampling factor and
// thereby the latent frame rate.
struct ModelConfig {
    std::vector<int> strides{2, 4, 5, 8};
    int base_channels = 16;
    int latent_dim = 32;
    std::vector<int> mrf_kernels{3, 7};
    std::vector<int> mrf_dilations{1, 3};
    int bottleneck_expansion = 4;
    int conv_groups = 4;
    int sample_rate = 24000;
    SnakeMode activation = SnakeMode::amplitude_bias;

    int downsampling() const;
    double latent_rate() const { return static_cast<double>(sample_rate) / downsampling(); }
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Encoder output: d x T matrix at the latent frame rate.
struct LatentTensor {
    Tensor values;
    double latent_rate = 0.0;
};

// Strided downsampling tower: input conv, then per stride a fusion block,
// bottleneck, activation and a stride-s conv with kernel 2s, then the
// latent projection. Output frames: ceil(input / product(strides)).
struct Encoder {
    Conv1d conv_in;
    struct Stage {
        MRFBlock mrf;
        InvertedBottleneck ib;
        SnakeLayer act;
        Conv1d down;
    };
    std::vector<Stage> stages;
    Conv1d conv_out;

    struct Cache {
        bool filled = false;
        Conv1d::Cache in;
        struct StageCache {
            MRFBlock::Cache mrf;
            InvertedBottleneck::Cache ib;
            SnakeLayer::Cache act;
            Conv1d::Cache down;
        };
        std::vector<StageCache> stages;
        Conv1d::Cache out;
    };

    explicit Encoder(const ModelConfig& cfg);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dz);
    void params(ParamList& out, const std::string& prefix);
};

// Mirror tower: latent conv in, per reversed stride a transposed conv
// (output exactly stride x input frames) followed by fusion and
// bottleneck, then a final activation and the single-channel output conv.
struct Decoder {
    Conv1d conv_in;
    struct Stage {
        SnakeLayer act;
        ConvTranspose1d up;
        MRFBlock mrf;
        InvertedBottleneck ib;
    };
    std::vector<Stage> stages;
    SnakeLayer act_out;
    Conv1d conv_out;

    struct Cache {
        bool filled = false;
        Conv1d::Cache in;
        struct StageCache {
            SnakeLayer::Cache act;
            ConvTranspose1d::Cache up;
            MRFBlock::Cache mrf;
            InvertedBottleneck::Cache ib;
        };
        std::vector<StageCache> stages;
        SnakeLayer::Cache act_out;
        Conv1d::Cache out;
    };

    explicit Decoder(const ModelConfig& cfg);
    void init(Rng& rng);
    Tensor forward(const Tensor& z, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

struct Model {
    ModelConfig cfg;
    Encoder encoder;
    Decoder decoder;

    explicit Model(const ModelConfig& cfg_);
    void init(Rng& rng);
    // Parameters in declaration order; checkpoint files and the optimizer
    // both follow this order.
    ParamList parameters();
    size_t parameter_count();
};

// Runs the encoder on a mono buffer (sample rate must match the config;
// empty audio is an error).
LatentTensor encode(const AudioBuffer& audio, const Model& model, Encoder::Cache* cache = nullptr);

// Runs the decoder; output length is exactly T x product(strides).
AudioBuffer decode_latent(const LatentTensor& z, const Model& model,
                          Decoder::Cache* cache = nullptr);

} // namespace mbsc

#endif
