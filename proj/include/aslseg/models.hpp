#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "aslseg/nn/unet.hpp"
#include "aslseg/types.hpp"

namespace aslseg {

// Backbone knobs shared by all three models. Defaults are the desk-scale
// preset; corpus_scale_preset() widens the net for real corpora.
struct SegmenterConfig {
    int encoder_depth = 4;
    int base_channels = 16;
    double dropout = 0.1; // must stay > 0 for two-pass consistency training
    int in_channels = 1;

    nn::UNetConfig to_unet() const;
    static SegmenterConfig desk_scale_preset();
    static SegmenterConfig corpus_scale_preset();
};

// Adaptation-network knobs: same backbone, input fixed at 2 channels
// (image + pseudo-label).
struct AdapterConfig {
    int encoder_depth = 4;
    int base_channels = 16;
    double dropout = 0.0;

    nn::UNetConfig to_unet() const;
};

// Two stochastic passes over the same input; with dropout 0 the passes are
// bit-identical (and a consistency loss on them degenerates to 0).
std::pair<ProbMapF, ProbMapF> forward_twice(const nn::UNet& model, const nn::Tensor3& input,
                                            std::uint64_t seed1, std::uint64_t seed2,
                                            nn::Workspace& ws1, nn::Workspace& ws2);

// Uniformly random foreground pixel. Throws EmptyMaskError when the mask has
// no foreground; callers own the skip policy.
PointPrompt sample_random_click(const Mask& mask, std::uint64_t seed);

enum class ClickPolicy { random_only, iterative, mixed };

struct FineTuneConfig {
    long iterations = 200;
    int batch_size = 8;
    double learning_rate = 0.01;
    double lr_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double gamma = 1.0; // CE weight in the dice+CE objective
    ClickPolicy policy = ClickPolicy::mixed;
    int iterative_rounds = 3;
};

// Point-prompted segmenter: the click enters as an extra input channel,
// a Gaussian heatmap of fixed width centered on the prompt.
class PromptableSegmenter {
public:
    static constexpr double kPromptSigma = 4.0;

    PromptableSegmenter() = default;
    PromptableSegmenter(const SegmenterConfig& cfg, std::uint64_t init_seed);
    explicit PromptableSegmenter(nn::UNet net);

    ProbMapF predict(const Slice& slice, const PointPrompt& prompt) const;

    // Dice+CE fine-tuning on prompted predictions. Every sample must carry a
    // non-empty mask (clicks are sampled from it).
    void fine_tune(const std::vector<LabeledSample>& tumor_samples, const FineTuneConfig& cfg,
                   std::uint64_t seed);

    const nn::UNet& net() const { return net_; }
    nn::UNet& net() { return net_; }

    static ImageGrid prompt_heatmap(int rows, int cols, const PointPrompt& p);

private:
    nn::UNet net_;
};

// First click random over gt foreground; later clicks come from the current
// false-negative region (gt minus the thresholded prediction), falling back
// to gt foreground when that region is empty.
std::vector<PointPrompt> iterative_click_sampling(const PromptableSegmenter& model,
                                                  const Slice& slice, const Mask& gt, int n_rounds,
                                                  std::uint64_t seed);

struct AdapterTrainConfig {
    long iterations = 200;
    int batch_size = 8;
    double learning_rate = 0.01;
    double lr_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    double gamma = 1.0;
};

// Refinement network over (image, pseudo-label) stacks.
class AdapterNetwork {
public:
    AdapterNetwork() = default;
    AdapterNetwork(const AdapterConfig& cfg, std::uint64_t init_seed);
    explicit AdapterNetwork(nn::UNet net);

    ProbMapF refine(const ImageGrid& image, const Mask& pseudo) const;

    void train(const std::vector<SyntheticSample>& samples, const AdapterTrainConfig& cfg,
               std::uint64_t seed);

    const nn::UNet& net() const { return net_; }
    nn::UNet& net() { return net_; }

private:
    nn::UNet net_;
};

} // namespace aslseg
