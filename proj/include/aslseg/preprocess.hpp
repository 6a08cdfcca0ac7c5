#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aslseg/types.hpp"

namespace aslseg {

// Dense 3D scalar volume, plane-major: value(z, y, x).
struct Volume {
    std::string id;
    int nz = 0, ny = 0, nx = 0;
    std::vector<float> data;

    Volume() = default;
    Volume(std::string vid, int z, int y, int x)
        : id(std::move(vid)), nz(z), ny(y), nx(x),
          data(static_cast<std::size_t>(z) * y * x, 0.f) {}

    float& at(int z, int y, int x) {
        return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
    float at(int z, int y, int x) const {
        return data[(static_cast<std::size_t>(z) * ny + y) * nx + x];
    }
};

// HU windowing: clamp every voxel to [window_lo, window_hi], then map
// affinely onto [0,1]. Rejects non-finite voxels, naming the first bad index.
Volume clip_and_normalize(const Volume& volume, float window_lo = -82.f, float window_hi = 198.f);

// Split a (normalized) volume into axial slices, ids "<volume_id>_z<k>".
// When a label volume is given it must match the image shape; its planes
// become per-slice masks (any nonzero voxel counts as foreground).
std::vector<std::pair<Slice, std::optional<Mask>>> volume_to_slices(const Volume& volume,
                                                                    const Volume* masks = nullptr);

// Remove every 8-connected foreground component smaller than min_pixels.
Mask filter_small_tumors(const Mask& mask, std::size_t min_pixels = 100);

// 8-connected component labels, 0 = background, components numbered from 1.
// Returns the label grid and per-component pixel counts (index = label - 1).
std::pair<Array2D<int>, std::vector<std::size_t>> connected_components(const MaskGrid& mask);

} // namespace aslseg
