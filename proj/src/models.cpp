#include "aslseg/models.hpp"

#include <cmath>

#include "aslseg/rng.hpp"

namespace aslseg {

nn::UNetConfig SegmenterConfig::to_unet() const {
    nn::UNetConfig u;
    u.in_channels = in_channels;
    u.depth = encoder_depth;
    u.base_channels = base_channels;
    u.dropout = static_cast<float>(dropout);
    return u;
}

SegmenterConfig SegmenterConfig::desk_scale_preset() { return SegmenterConfig{}; }

SegmenterConfig SegmenterConfig::corpus_scale_preset() {
    SegmenterConfig c;
    c.base_channels = 32;
    return c;
}

nn::UNetConfig AdapterConfig::to_unet() const {
    nn::UNetConfig u;
    u.in_channels = 2;
    u.depth = encoder_depth;
    u.base_channels = base_channels;
    u.dropout = static_cast<float>(dropout);
    return u;
}

std::pair<ProbMapF, ProbMapF> forward_twice(const nn::UNet& model, const nn::Tensor3& input,
                                            std::uint64_t seed1, std::uint64_t seed2,
                                            nn::Workspace& ws1, nn::Workspace& ws2) {
    ProbMapF p1 = model.forward_train(input, seed1, ws1);
    ProbMapF p2 = model.forward_train(input, seed2, ws2);
    return {std::move(p1), std::move(p2)};
}

PointPrompt sample_random_click(const Mask& mask, std::uint64_t seed) {
    std::vector<int> fg;
    fg.reserve(256);
    const int w = mask.cols();
    for (int i = 0; i < mask.rows() * w; ++i)
        if (mask.data.raw()[i]) fg.push_back(i);
    if (fg.empty()) throw EmptyMaskError("sample_random_click: mask has no foreground");
    Rng rng(derive_seed(seed, "click"));
    const int idx = fg[rng.index(fg.size())];
    return PointPrompt{idx / w, idx % w};
}

// ---------------------------------------------------------------------------
// PromptableSegmenter

PromptableSegmenter::PromptableSegmenter(const SegmenterConfig& cfg, std::uint64_t init_seed) {
    SegmenterConfig c = cfg;
    c.in_channels = 2; // image + prompt heatmap
    net_ = nn::UNet(c.to_unet(), init_seed);
}

PromptableSegmenter::PromptableSegmenter(nn::UNet net) : net_(std::move(net)) {
    if (net_.config().in_channels != 2)
        throw ValidationError("PromptableSegmenter: network must take 2 input channels");
}

ImageGrid PromptableSegmenter::prompt_heatmap(int rows, int cols, const PointPrompt& p) {
    if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols)
        throw ValidationError("prompt outside image bounds");
    ImageGrid heat(rows, cols);
    const double inv = 1.0 / (2.0 * kPromptSigma * kPromptSigma);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double d2 = static_cast<double>(r - p.row) * (r - p.row) +
                              static_cast<double>(c - p.col) * (c - p.col);
            heat(r, c) = static_cast<float>(std::exp(-d2 * inv));
        }
    return heat;
}

ProbMapF PromptableSegmenter::predict(const Slice& slice, const PointPrompt& prompt) const {
    ImageGrid heat = prompt_heatmap(slice.height(), slice.width(), prompt);
    return net_.predict(nn::stack_channels(slice.image, heat));
}

std::vector<PointPrompt> iterative_click_sampling(const PromptableSegmenter& model,
                                                  const Slice& slice, const Mask& gt, int n_rounds,
                                                  std::uint64_t seed) {
    if (n_rounds < 1) throw ValidationError("iterative_click_sampling: n_rounds must be >= 1");
    if (gt.empty_mask()) throw EmptyMaskError("iterative_click_sampling: empty ground truth");

    std::vector<PointPrompt> clicks;
    clicks.push_back(sample_random_click(gt, derive_seed(seed, "iter_click", 0)));
    for (int round = 1; round < n_rounds; ++round) {
        Mask pred = threshold_prob(model.predict(slice, clicks.back()));
        Mask false_neg(gt.rows(), gt.cols());
        for (std::size_t i = 0; i < gt.data.size(); ++i)
            false_neg.data.raw()[i] = (gt.data.raw()[i] && !pred.data.raw()[i]) ? 1 : 0;
        const Mask& source = false_neg.empty_mask() ? gt : false_neg;
        clicks.push_back(sample_random_click(source, derive_seed(seed, "iter_click", round)));
    }
    return clicks;
}

void PromptableSegmenter::fine_tune(const std::vector<LabeledSample>& tumor_samples,
                                    const FineTuneConfig& cfg, std::uint64_t seed) {
    if (tumor_samples.empty())
        throw ValidationError("fine_tune: empty training set");
    for (const auto& s : tumor_samples)
        if (s.mask.empty_mask())
            throw ValidationError("fine_tune: sample " + s.slice.id +
                                  " has no tumor; prompts need foreground");

    nn::Sgd sgd(cfg.momentum, cfg.weight_decay);
    nn::Grads grads = net_.make_grads();
    LossWeights w;
    w.gamma = cfg.gamma;
    Rng batch_rng(derive_seed(seed, "ms.batch"));

    for (long step = 0; step < cfg.iterations; ++step) {
        grads.zero();
        for (int bi = 0; bi < cfg.batch_size; ++bi) {
            const auto& sample = tumor_samples[batch_rng.index(tumor_samples.size())];
            const std::uint64_t click_seed =
                derive_seed(seed, "ms.click", static_cast<std::uint64_t>(step) * cfg.batch_size + bi);

            PointPrompt prompt{};
            bool use_iterative = cfg.policy == ClickPolicy::iterative;
            if (cfg.policy == ClickPolicy::mixed) use_iterative = batch_rng.bernoulli(0.5);
            if (use_iterative && cfg.iterative_rounds > 1) {
                auto clicks =
                    iterative_click_sampling(*this, sample.slice, sample.mask, cfg.iterative_rounds, click_seed);
                prompt = clicks.back();
            } else {
                prompt = sample_random_click(sample.mask, click_seed);
            }

            ImageGrid heat = prompt_heatmap(sample.slice.height(), sample.slice.width(), prompt);
            nn::Tensor3 input = nn::stack_channels(sample.slice.image, heat);
            nn::Workspace ws;
            ProbMapF p = net_.forward_train(input, derive_seed(seed, "ms.drop", step * cfg.batch_size + bi), ws);
            ProbMap grad_d;
            adaptation_loss(to_prob_map(p), sample.mask, w, &grad_d);
            net_.backward(grad_d.cast<float>(), ws, grads);
        }
        sgd.step(net_, grads, poly_lr(cfg.learning_rate, step, cfg.iterations, cfg.lr_power),
                 1.0 / cfg.batch_size);
    }
}

// ---------------------------------------------------------------------------
// AdapterNetwork

AdapterNetwork::AdapterNetwork(const AdapterConfig& cfg, std::uint64_t init_seed)
    : net_(cfg.to_unet(), init_seed) {}

AdapterNetwork::AdapterNetwork(nn::UNet net) : net_(std::move(net)) {
    if (net_.config().in_channels != 2)
        throw ValidationError("AdapterNetwork: network must take 2 input channels");
}

ProbMapF AdapterNetwork::refine(const ImageGrid& image, const Mask& pseudo) const {
    require_same_shape(image, pseudo.data, "refine");
    return net_.predict(nn::stack_channels(image, pseudo.data));
}

void AdapterNetwork::train(const std::vector<SyntheticSample>& samples,
                           const AdapterTrainConfig& cfg, std::uint64_t seed) {
    if (samples.empty()) throw ValidationError("AdapterNetwork::train: empty training set");

    nn::Sgd sgd(cfg.momentum, cfg.weight_decay);
    nn::Grads grads = net_.make_grads();
    LossWeights w;
    w.gamma = cfg.gamma;
    Rng batch_rng(derive_seed(seed, "an.batch"));

    for (long step = 0; step < cfg.iterations; ++step) {
        grads.zero();
        for (int bi = 0; bi < cfg.batch_size; ++bi) {
            const auto& s = samples[batch_rng.index(samples.size())];
            nn::Tensor3 input = nn::stack_channels(s.image, s.pseudo);
            nn::Workspace ws;
            ProbMapF p = net_.forward_train(input, derive_seed(seed, "an.drop", step * cfg.batch_size + bi), ws);
            ProbMap grad_d;
            adaptation_loss(to_prob_map(p), s.target, w, &grad_d);
            net_.backward(grad_d.cast<float>(), ws, grads);
        }
        sgd.step(net_, grads, poly_lr(cfg.learning_rate, step, cfg.iterations, cfg.lr_power),
                 1.0 / cfg.batch_size);
    }
}

} // namespace aslseg
