#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aslseg/partition.hpp"
#include "aslseg/types.hpp"

namespace aslseg {

// On-disk corpus layout, shared by the synthetic generator and the CT
// preprocessor so downstream stages are source-agnostic:
//
//   <dir>/manifest.json
//   <dir>/arrays/<id>.img.npy   float32 image in [0,1]
//   <dir>/arrays/<id>.msk.npy   uint8 mask (present whenever ground truth is known)
//
// The manifest records id, shape, has_tumor and partition per slice. Masks
// of unlabeled slices stay on disk (hidden ground truth for evaluation) but
// are not handed to the pipeline.

std::map<std::string, PartitionTag> partition_map(const DatasetState& state);

void save_corpus(const std::string& dir, const std::vector<std::pair<Slice, Mask>>& samples,
                 const std::map<std::string, PartitionTag>& partitions, const nlohmann::json& meta,
                 bool force = false);

nlohmann::json load_manifest(const std::string& dir);

// Rebuild the pipeline's view: labeled/validation/test carry masks, the
// unlabeled partition carries bare slices.
DatasetState load_dataset_state(const std::string& dir);

// Every mask stored in the corpus, including those of unlabeled slices.
std::map<std::string, Mask> load_hidden_masks(const std::string& dir);

Slice load_slice(const std::string& dir, const std::string& id);

} // namespace aslseg
