#pragma once

#include <cstdint>
#include <vector>

#include "aslseg/losses.hpp"
#include "aslseg/rng.hpp"
#include "aslseg/types.hpp"

namespace aslseg::nn {

// Single-sample CHW activation tensor.
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.f) {}

    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    float* channel(int ci) { return v.data() + ci * plane(); }
    const float* channel(int ci) const { return v.data() + ci * plane(); }
};

// k x k same-padding convolution, stride 1. Weights live here; activations
// and gradients are passed in so the layer itself stays stateless per call.
struct Conv {
    int in_ch = 0, out_ch = 0, k = 3;
    std::vector<float> w; // [out][in][k][k]
    std::vector<float> b; // [out]

    void configure(int in, int out, int ksize);
    void init(Rng& rng);
    std::size_t weight_count() const { return w.size() + b.size(); }

    void forward(const Tensor3& x, Tensor3& y, std::vector<float>& col_scratch) const;
    // dW/db accumulate into gw/gb; dx computed when non-null
    void backward(const Tensor3& x, const Tensor3& dy, Tensor3* dx, std::vector<float>& col_scratch,
                  std::vector<float>& gw, std::vector<float>& gb) const;
};

struct UNetConfig {
    int in_channels = 1;
    int depth = 3;          // pooling stages
    int base_channels = 8;  // channels at full resolution, doubling per stage
    int max_channels = 256;
    float dropout = 0.1f;

    int channels_at(int level) const; // level 0..depth (depth = bottleneck)
};

// Everything the backward pass needs from one forward pass of one sample.
struct Workspace;

struct Grads {
    std::vector<std::vector<float>> gw, gb; // parallel to UNet::conv_order()
    void zero();
};

// Plain encoder-decoder segmentation network with skip connections,
// max-pool downsampling, nearest-neighbor upsampling and a sigmoid head.
// Dropout sits after the bottleneck and after each decoder block.
class UNet {
public:
    UNet() = default;
    UNet(const UNetConfig& cfg, std::uint64_t init_seed);

    const UNetConfig& config() const { return cfg_; }

    // Deterministic inference (dropout off).
    ProbMapF predict(const Tensor3& x) const;

    // Stochastic forward keeping activations for backward. With dropout rate
    // 0 this is bit-identical to predict().
    ProbMapF forward_train(const Tensor3& x, std::uint64_t dropout_seed, Workspace& ws) const;

    // dprob = dLoss/dProbability (same H,W as the original input).
    void backward(const Array2D<float>& dprob, Workspace& ws, Grads& g) const;

    Grads make_grads() const;
    std::size_t parameter_count() const;

    // Fixed traversal order used by init, SGD, serialization and Grads.
    std::vector<Conv*> conv_order();
    std::vector<const Conv*> conv_order() const;

private:
    Tensor3 pad_input(const Tensor3& x, int& ph, int& pw) const;
    ProbMapF run_forward(const Tensor3& x, std::uint64_t dropout_seed, Workspace& ws,
                         bool stochastic) const;

    UNetConfig cfg_;
    std::vector<Conv> enc1_, enc2_; // per level
    Conv bot1_, bot2_;
    std::vector<Conv> up_, dec1_, dec2_; // per level, index = level
    Conv head_;
};

struct Workspace {
    // encoder
    std::vector<Tensor3> enc_x, enc_m, enc_y; // block input, post-relu1, post-relu2 (skip)
    std::vector<std::vector<int>> pool_arg;   // flat argmax per pooled element
    // bottleneck
    Tensor3 bot_x, bot_m, bot_y;
    std::vector<std::uint8_t> bot_keep;
    // decoder
    std::vector<Tensor3> up_in, up_out, upc_y, cat_x, dec_m, dec_y;
    std::vector<std::vector<std::uint8_t>> dec_keep;
    // head
    Tensor3 head_x;
    Tensor3 prob; // sigmoid output on the padded grid
    int in_h = 0, in_w = 0, pad_h = 0, pad_w = 0;
    std::vector<float> col; // im2col scratch
};

// SGD with momentum and L2 weight decay.
class Sgd {
public:
    Sgd(double momentum = 0.9, double weight_decay = 1e-4) : momentum_(momentum), weight_decay_(weight_decay) {}

    void step(UNet& net, const Grads& g, double lr, double grad_scale);

private:
    double momentum_, weight_decay_;
    std::vector<std::vector<float>> vw_, vb_;
};

// Stack 1 or 2 image-sized channels into a network input.
Tensor3 stack_channels(const ImageGrid& c0);
Tensor3 stack_channels(const ImageGrid& c0, const ImageGrid& c1);
Tensor3 stack_channels(const ImageGrid& c0, const MaskGrid& c1);

} // namespace aslseg::nn
