#ifndef MBSC_LAYERS_HPP
#define MBSC_LAYERS_HPP

#include <string>
#include <vector>

#include "mbsc/rng.hpp"
#include "mbsc/snake.hpp"
#include "mbsc/tensor.hpp"

namespace mbsc {

// Named view of one parameter tensor and its gradient accumulator.
// Collected in declaration order; checkpoint layout and the optimizer
// both rely on that order being stable.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};
using ParamList = std::vector<ParamRef>;

void zero_grads(const ParamList& params);

// 1-D convolution over channels x time tensors, zero-padded.
//   same:      stride 1, odd kernel, output length = input length.
//   same_ceil: strided, output length = ceil(T / stride), padding split
//              left/right with the extra sample on the right.
enum class PadMode { same, same_ceil };

struct Conv1d {
    int in_ch = 0, out_ch = 0, kernel = 1, stride = 1, dilation = 1, groups = 1;
    PadMode pad_mode = PadMode::same;
    Tensor w;  // out_ch x (in_ch/groups * kernel), row o laid out [i][tap]
    Tensor b;  // out_ch x 1
    Tensor dw, db;

    struct Cache {
        Tensor x;
        int pad_left = 0;
    };

    Conv1d() = default;
    Conv1d(int in, int out, int k, int stride_ = 1, int dilation_ = 1, int groups_ = 1,
           PadMode mode = PadMode::same);

    void init(Rng& rng);
    int output_length(int T) const;
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

// Transposed 1-D convolution with kernel = 2 * stride, output trimmed
// symmetrically to exactly T * stride samples.
struct ConvTranspose1d {
    int in_ch = 0, out_ch = 0, kernel = 1, stride = 1;
    Tensor w;  // out_ch x (in_ch * kernel)
    Tensor b;  // out_ch x 1
    Tensor dw, db;

    struct Cache {
        Tensor x;
    };

    ConvTranspose1d() = default;
    ConvTranspose1d(int in, int out, int k, int stride_);

    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

// Which snake parameters are learned: the plain form learns only the
// frequency alpha; `amplitude` adds beta; `amplitude_bias` adds gamma.
enum class SnakeMode { vanilla, amplitude, amplitude_bias };

// Per-channel snake activation with alpha and beta kept positive by
// learning them in log space. Inactive parameters stay at beta = 1,
// gamma = 0.
struct SnakeLayer {
    int channels = 0;
    SnakeMode mode = SnakeMode::amplitude_bias;
    Tensor log_alpha, log_beta, gamma;  // channels x 1 each
    Tensor d_log_alpha, d_log_beta, d_gamma;

    struct Cache {
        Tensor x;
    };

    SnakeLayer() = default;
    SnakeLayer(int channels_, SnakeMode mode_);

    SnakeParams effective_params() const;
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

// Multi-receptive-field fusion: parallel residual branches, branch i being
// x + conv_i(snake_i(x)) with its own kernel/dilation pair, averaged.
// Kernels must be odd (same-length branches); kernel and dilation lists
// zip together and must have equal length.
struct MRFBlock {
    int channels = 0;
    std::vector<SnakeLayer> acts;
    std::vector<Conv1d> convs;

    struct Cache {
        std::vector<SnakeLayer::Cache> act;
        std::vector<Conv1d::Cache> conv;
    };

    MRFBlock() = default;
    MRFBlock(int channels_, const std::vector<int>& kernels, const std::vector<int>& dilations,
             SnakeMode mode);

    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

// Residual inverted bottleneck: x + project(snake(expand(x))) with a
// grouped pointwise expansion to expansion * channels and a dense
// pointwise projection back. Channel count must be divisible by groups.
struct InvertedBottleneck {
    int channels = 0, expansion = 1, groups = 1;
    Conv1d expand;
    SnakeLayer act;
    Conv1d project;

    struct Cache {
        Conv1d::Cache expand;
        SnakeLayer::Cache act;
        Conv1d::Cache project;
    };

    InvertedBottleneck() = default;
    InvertedBottleneck(int channels_, int expansion_, int groups_, SnakeMode mode);

    void init(Rng& rng);
    Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
    Tensor backward(const Cache& cache, const Tensor& dy);
    void params(ParamList& out, const std::string& prefix);
};

} // namespace mbsc

#endif
