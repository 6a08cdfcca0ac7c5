#pragma once

#include <cstdint>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

enum class PartitionTag { labeled, unlabeled, validation, test };

const char* partition_name(PartitionTag p);
PartitionTag partition_from_name(const std::string& name);

// Stratified train/test/val/labeled split.
//
// Sizes come first, from the whole set: n_test = floor(test_fraction * N),
// then within the remaining train pool n_val = floor(val_fraction_of_train *
// n_train) and n_labeled = floor(labeled_fraction_of_train * n_train); the
// remainder is unlabeled. Tumor slices are then apportioned to partitions by
// largest remainder so each partition's tumor ratio sits within one slice of
// the global ratio. Assignment order inside a stratum follows a seeded
// shuffle; each partition is finally sorted by id.
//
// The unlabeled partition keeps only the Slice (its mask is dropped).
DatasetState make_partition(const std::vector<std::pair<Slice, Mask>>& samples,
                            double test_fraction = 0.2,
                            double val_fraction_of_train = 0.1,
                            double labeled_fraction_of_train = 0.1,
                            std::uint64_t seed = 0);

// Invariant check: partitions pairwise disjoint by id, union covers
// expected_total ids (when >= 0). Throws ConsistencyError on violation.
void check_partition_invariants(const DatasetState& state, long expected_total = -1);

} // namespace aslseg
