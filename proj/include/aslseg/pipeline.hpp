#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aslseg/metrics.hpp"
#include "aslseg/models.hpp"
#include "aslseg/perturb.hpp"
#include "aslseg/types.hpp"

namespace aslseg {

struct PipelineConfig {
    // selection gate
    double beta = 0.9;
    bool accept_empty_agreement = true;

    // outer loop
    int max_iterations = 4;
    int patience = 1; // stop after this many non-improving iterations

    // stage-1 consistency training
    long ssl_iterations = 600;  // desk scale; the corpus preset raises this to 27000
    int ssl_batch_size = 16;    // half labeled, half unlabeled per step
    double learning_rate = 0.01;
    double lr_power = 0.9;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int eval_every = 50; // validation cadence (steps)
    LossWeights loss;

    // stage-2 / stage-3 models, trained at iteration 0 and frozen unless
    // refresh_models is set
    bool refresh_models = false;
    FineTuneConfig ms;
    AdapterTrainConfig adapter;
    int adapter_replication = 4; // synthetic samples per labeled slice
    PerturbConfig perturb;

    SegmenterConfig segmenter;
    AdapterConfig adapter_net;

    std::uint64_t seed = 0;

    void validate() const;
};

// Full audit row for one unlabeled slice in one iteration.
struct SelectionRecord {
    std::string slice_id;
    int iteration = 0;
    Mask ss_mask, ms_mask, an_mask;
    double agreement_dsc = 0.0;
    bool accepted = false;
    bool ms_skipped = false;
    std::optional<PointPrompt> prompt;
};

// ---------------------------------------------------------------------------
// stage operations

// Consistency-trained segmenter over the current labeled+unlabeled split;
// returns the weights that scored the best validation DSC during training.
nn::UNet stage1_train(const DatasetState& state, const PipelineConfig& cfg, std::uint64_t seed);

// Deterministic thresholded predictions for every unlabeled slice.
std::vector<std::pair<std::string, Mask>> stage1_infer(const nn::UNet& segmenter,
                                                       const std::vector<Slice>& unlabeled);

struct Stage2Result {
    Mask mask;
    bool skipped = false;
    std::optional<PointPrompt> prompt;
};

// Prompted prediction seeded by a random click inside the stage-1 mask;
// an empty stage-1 mask skips prompting and passes the empty mask forward.
Stage2Result stage2_prompt_predict(const PromptableSegmenter& ms, const Slice& slice,
                                   const Mask& ss_mask, std::uint64_t seed);

// Refiner pass over (image, stage-2 mask), thresholded at 0.5.
Mask stage3_refine(const AdapterNetwork& an, const Slice& slice, const Mask& ms_mask);

// Fills agreement_dsc (DSC between SS and AN masks) and the accepted flag on
// every record, then partitions. Empty-empty pairs follow accept_empty.
std::pair<std::vector<SelectionRecord>, std::vector<SelectionRecord>> select_reliable(
    std::vector<SelectionRecord> records, double beta, bool accept_empty);

// Moves accepted slices from unlabeled to labeled (origin = pseudo, AN mask
// as the label). Throws ConsistencyError when a slice is not in unlabeled.
DatasetState expand_labeled_set(DatasetState state, const std::vector<SelectionRecord>& accepted);

// Threshold + confusion metrics of a segmenter over a labeled evaluation set.
MetricReport evaluate_segmenter(const nn::UNet& net, const std::vector<LabeledSample>& samples,
                                const std::string& label);

// ---------------------------------------------------------------------------
// outer loop

struct IterationSummary {
    int iteration = 0;
    double val_dsc = 0.0;
    int accepted = 0;
    int rejected = 0;
    std::size_t labeled_size = 0;
    std::size_t unlabeled_size = 0;
};

struct RunResult {
    nn::UNet best_segmenter;
    int best_iteration = 0;
    double best_val_dsc = 0.0;
    std::vector<MetricReport> history; // test metrics, one per iteration
    std::vector<SelectionRecord> records;
    std::vector<IterationSummary> summaries;
    DatasetState final_state;
    std::string stop_reason;
};

// Runs the full loop, persisting per-iteration artifacts under run_dir:
//   run_dir/iter_<k>/{checkpoints,pseudolabels,selection_records.jsonl,metrics.json}
//   run_dir/{manifest.json,state.json,ms.ckpt,an.ckpt}
// With resume=true a run continues after its last completed iteration.
RunResult run_pipeline(const std::string& corpus_dir, const std::string& run_dir,
                       const PipelineConfig& cfg, bool resume = false);

// Reload every selection record a run wrote (for audits and reports).
std::vector<SelectionRecord> load_selection_records(const std::string& run_dir);

} // namespace aslseg
