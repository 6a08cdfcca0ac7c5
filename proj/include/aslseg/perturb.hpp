#pragma once

#include <cstdint>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

struct PerturbConfig {
    double apply_probability = 0.4; // independent per operation
    int noise_blobs_min = 1, noise_blobs_max = 5;
    double noise_radius_min = 2.0, noise_radius_max = 8.0;
    double occlude_fraction_min = 0.1, occlude_fraction_max = 0.5;
    double elastic_amplitude = 5.0; // max displacement, px
    double elastic_sigma = 6.0;     // field smoothness, px
    int morph_radius_min = 1, morph_radius_max = 4;
    double all_black_probability = 0.05;

    void validate() const;
};

// Which operations actually fired for one perturb() call.
struct PerturbTrace {
    bool all_black = false;
    bool noise = false, occlude = false, elastic = false, dilate = false, erode = false;
};

// Over-segmentation: union foreground with random background blobs.
Mask add_background_noise(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed);

// Under-segmentation: remove a contiguous patch covering a configured
// fraction of the foreground. No-op on empty masks.
Mask occlude_foreground(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed);
Mask occlude_fraction(const Mask& mask, double fraction, std::uint64_t seed);

// Boundary shift: warp by a smooth random displacement field, re-binarize.
Mask elastic_deform(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed);

// Morphology with a disc structuring element (outside the image counts as
// background, so erosion shrinks at borders).
Mask dilate(const Mask& mask, int radius);
Mask erode(const Mask& mask, int radius);

// Full corruption draw: all-black override first, then each operation
// independently with cfg.apply_probability, composed in the fixed order
// noise -> occlusion -> elastic -> dilation -> erosion.
Mask perturb(const Mask& mask, const PerturbConfig& cfg, std::uint64_t seed,
             PerturbTrace* trace = nullptr);

// replication * |labeled| samples of (image, perturbed gt) -> gt.
std::vector<SyntheticSample> build_adaptation_training_set(
    const std::vector<std::pair<Slice, Mask>>& labeled, int replication, const PerturbConfig& cfg,
    std::uint64_t seed);

} // namespace aslseg
