#pragma once

#include <cstdint>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

struct SynthConfig {
    double tumor_free_fraction = 0.2; // exact count round(frac*n), spread by seeded shuffle
    int max_tumors = 3;               // tumor slices carry 1..max_tumors lesions
    double min_radius = 4.0;          // base lesion radius in pixels
    double max_radius_fraction = 1.0 / 6.0; // of min(height,width)
    double min_contrast = 0.12;       // additive brightness of the dimmest lesion
    double max_contrast = 0.40;
    double noise_sigma = 0.015;
    int max_distractors = 2;          // dim non-tumor blobs, kept away from lesions
};

// Deterministic synthetic 2D corpus: smooth background texture, optional dim
// distractor blobs, and bright blobby lesions recorded in the mask. Lesion
// pixels always sit above the surrounding background mean; contrast, size,
// shape and count vary so a segmenter gets both easy and hard slices.
std::vector<std::pair<Slice, Mask>> generate_synthetic_corpus(int n_slices, int height, int width,
                                                              std::uint64_t seed,
                                                              const SynthConfig& cfg = {});

} // namespace aslseg
