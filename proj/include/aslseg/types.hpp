#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aslseg/array2d.hpp"

namespace aslseg {

// Binary segmentation map, 0 = background, 1 = tumor.
struct Mask {
    MaskGrid data;

    Mask() = default;
    explicit Mask(MaskGrid g) : data(std::move(g)) {}
    Mask(int rows, int cols, std::uint8_t fill = 0) : data(rows, cols, fill) {}

    int rows() const { return data.rows(); }
    int cols() const { return data.cols(); }
    bool empty_mask() const { return count_foreground(data) == 0; }
    std::size_t foreground() const { return count_foreground(data); }
    std::uint8_t& operator()(int r, int c) { return data(r, c); }
    std::uint8_t operator()(int r, int c) const { return data(r, c); }
    bool operator==(const Mask& o) const { return data == o.data; }
};

// One preprocessed 2D image, intensities in [0,1].
struct Slice {
    std::string id;
    ImageGrid image;
    bool has_tumor = false;

    int height() const { return image.rows(); }
    int width() const { return image.cols(); }
};

enum class LabelOrigin { original, pseudo };

struct LabeledSample {
    Slice slice;
    Mask mask;
    LabelOrigin origin = LabelOrigin::original;
};

// Which stage of the pipeline produced a mask.
enum class StageTag { SS, MS, AN };

inline const char* stage_name(StageTag s) {
    switch (s) {
        case StageTag::SS: return "ss";
        case StageTag::MS: return "ms";
        case StageTag::AN: return "an";
    }
    return "?";
}

struct PseudoLabel {
    std::string slice_id;
    Mask mask;
    StageTag stage = StageTag::AN;
    std::optional<double> agreement_dsc;
    int iteration = 0;
};

// Evolving labeled/unlabeled partition over pipeline iterations.
// Partitions are pairwise disjoint by slice id.
struct DatasetState {
    std::vector<LabeledSample> labeled;
    std::vector<Slice> unlabeled;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
    int iteration = 0;
};

// Training sample for the adaptation network: 2-channel input
// (image, corrupted pseudo-label) and the clean mask target.
struct SyntheticSample {
    std::string slice_id;
    ImageGrid image;    // channel 0, values in [0,1]
    MaskGrid pseudo;    // channel 1, values in {0,1}
    Mask target;
};

// Single positive click prompt.
struct PointPrompt {
    int row = 0;
    int col = 0;
};

} // namespace aslseg
